#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <deque>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fpb/error.hpp"
#include "fpb/rng.hpp"

namespace fpb {

struct Cell {
  int r = 0;
  int c = 0;
  friend constexpr bool operator==(Cell, Cell) noexcept = default;
  friend constexpr auto operator<=>(Cell, Cell) noexcept = default;
};

enum class Action { Up, Down, Left, Right };

using ActionSeq = std::vector<Action>;

constexpr std::string_view to_string(Action a) noexcept
{
  switch (a) {
    case Action::Up: return "up";
    case Action::Down: return "down";
    case Action::Left: return "left";
    case Action::Right: return "right";
  }
  return "?";
}

inline Action action_from_string(std::string_view s)
{
  if (s == "up") return Action::Up;
  if (s == "down") return Action::Down;
  if (s == "left") return Action::Left;
  if (s == "right") return Action::Right;
  fail(ErrorCode::ParseError, "unknown action '" + std::string(s) + "'");
}

constexpr Cell step(Cell c, Action a) noexcept
{
  switch (a) {
    case Action::Up: return {c.r - 1, c.c};
    case Action::Down: return {c.r + 1, c.c};
    case Action::Left: return {c.r, c.c - 1};
    case Action::Right: return {c.r, c.c + 1};
  }
  return c;
}

/// Action that moves `from` to the 4-neighbour `to`; false if not adjacent.
constexpr bool action_between(Cell from, Cell to, Action& out) noexcept
{
  for (Action a : {Action::Up, Action::Down, Action::Left, Action::Right}) {
    if (step(from, a) == to) {
      out = a;
      return true;
    }
  }
  return false;
}

constexpr bool adjacent(Cell a, Cell b) noexcept
{
  return (a.r == b.r && (a.c - b.c == 1 || b.c - a.c == 1)) || (a.c == b.c && (a.r - b.r == 1 || b.r - a.r == 1));
}

/// Grid maze. Internal edges are stored as two wall bitmaps: east walls
/// between (r,c) and (r,c+1), south walls between (r,c) and (r+1,c).
struct MazeSpec {
  int rows = 0;
  int cols = 0;
  std::vector<std::uint8_t> wall_east;   // rows * (cols - 1)
  std::vector<std::uint8_t> wall_south;  // (rows - 1) * cols
  Cell start;
  Cell goal;
  int icon_id = 0;
  std::uint64_t seed = 0;

  static MazeSpec closed(int rows, int cols)
  {
    MazeSpec m;
    m.rows = rows;
    m.cols = cols;
    m.wall_east.assign(static_cast<std::size_t>(rows) * (cols - 1), 1);
    m.wall_south.assign(static_cast<std::size_t>(rows - 1) * cols, 1);
    return m;
  }

  bool in_bounds(Cell c) const noexcept { return c.r >= 0 && c.c >= 0 && c.r < rows && c.c < cols; }
  int cell_count() const noexcept { return rows * cols; }
  int index(Cell c) const noexcept { return c.r * cols + c.c; }
  Cell cell_at(int i) const noexcept { return {i / cols, i % cols}; }

  /// True when a and b are not both in bounds and adjacent, or a wall separates them.
  bool blocked(Cell a, Cell b) const noexcept
  {
    if (!in_bounds(a) || !in_bounds(b) || !adjacent(a, b)) return true;
    if (a.r == b.r) return wall_east[static_cast<std::size_t>(a.r) * (cols - 1) + std::min(a.c, b.c)] != 0;
    return wall_south[static_cast<std::size_t>(std::min(a.r, b.r)) * cols + a.c] != 0;
  }

  void set_wall(Cell a, Cell b, bool wall)
  {
    if (!in_bounds(a) || !in_bounds(b) || !adjacent(a, b)) {
      fail(ErrorCode::InvalidMaze, "wall between non-adjacent cells");
    }
    if (a.r == b.r) {
      wall_east[static_cast<std::size_t>(a.r) * (cols - 1) + std::min(a.c, b.c)] = wall ? 1 : 0;
    } else {
      wall_south[static_cast<std::size_t>(std::min(a.r, b.r)) * cols + a.c] = wall ? 1 : 0;
    }
  }

  /// Internal walls as (cell, cell) pairs, first cell lexicographically smaller.
  std::vector<std::pair<Cell, Cell>> walls() const
  {
    std::vector<std::pair<Cell, Cell>> out;
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) {
        if (c + 1 < cols && blocked({r, c}, {r, c + 1})) out.push_back({{r, c}, {r, c + 1}});
        if (r + 1 < rows && blocked({r, c}, {r + 1, c})) out.push_back({{r, c}, {r + 1, c}});
      }
    }
    return out;
  }

  int open_passages() const noexcept
  {
    int n = 0;
    for (auto w : wall_east) n += w ? 0 : 1;
    for (auto w : wall_south) n += w ? 0 : 1;
    return n;
  }

  /// Open neighbours of c in Up, Down, Left, Right order.
  std::vector<Cell> open_neighbours(Cell c) const
  {
    std::vector<Cell> out;
    for (Action a : {Action::Up, Action::Down, Action::Left, Action::Right}) {
      const Cell n = step(c, a);
      if (!blocked(c, n)) out.push_back(n);
    }
    return out;
  }

  bool same_layout(const MazeSpec& o) const noexcept
  {
    return rows == o.rows && cols == o.cols && wall_east == o.wall_east && wall_south == o.wall_south;
  }

  friend bool operator==(const MazeSpec&, const MazeSpec&) = default;
};

/// Randomized depth-first carving of a perfect maze. Start and goal are left
/// at (0,0); sample_maze_instance assigns them.
inline MazeSpec generate_maze(int rows, int cols, std::uint64_t seed)
{
  if (rows < 2 || cols < 2) fail(ErrorCode::InvalidMaze, "maze needs at least 2 rows and 2 columns");
  MazeSpec m = MazeSpec::closed(rows, cols);
  m.seed = seed;
  Rng rng(seed);
  std::vector<std::uint8_t> seen(static_cast<std::size_t>(rows) * cols, 0);
  std::vector<Cell> stack;
  const Cell first = m.cell_at(static_cast<int>(rng.below(static_cast<std::uint64_t>(rows) * cols)));
  stack.push_back(first);
  seen[m.index(first)] = 1;
  std::array<Cell, 4> options{};
  while (!stack.empty()) {
    const Cell cur = stack.back();
    int k = 0;
    for (Action a : {Action::Up, Action::Down, Action::Left, Action::Right}) {
      const Cell n = step(cur, a);
      if (m.in_bounds(n) && !seen[m.index(n)]) options[k++] = n;
    }
    if (k == 0) {
      stack.pop_back();
      continue;
    }
    const Cell next = options[rng.below(static_cast<std::uint64_t>(k))];
    m.set_wall(cur, next, false);
    seen[m.index(next)] = 1;
    stack.push_back(next);
  }
  return m;
}

/// BFS distances over open passages from `from`; -1 where unreachable.
inline std::vector<int> bfs_distances(const MazeSpec& m, Cell from)
{
  std::vector<int> dist(static_cast<std::size_t>(m.cell_count()), -1);
  std::deque<Cell> q{from};
  dist[m.index(from)] = 0;
  while (!q.empty()) {
    const Cell c = q.front();
    q.pop_front();
    for (Cell n : m.open_neighbours(c)) {
      if (dist[m.index(n)] < 0) {
        dist[m.index(n)] = dist[m.index(c)] + 1;
        q.push_back(n);
      }
    }
  }
  return dist;
}

inline ActionSeq solve_shortest_path(const MazeSpec& m)
{
  if (!m.in_bounds(m.start) || !m.in_bounds(m.goal)) fail(ErrorCode::InvalidMaze, "start or goal out of bounds");
  // Walk back from the goal along decreasing distance to the start.
  const auto dist = bfs_distances(m, m.start);
  if (dist[m.index(m.goal)] < 0) fail(ErrorCode::InvalidMaze, "goal unreachable from start");
  ActionSeq rev;
  Cell cur = m.goal;
  while (!(cur == m.start)) {
    for (Cell n : m.open_neighbours(cur)) {
      if (dist[m.index(n)] == dist[m.index(cur)] - 1) {
        Action a{};
        action_between(n, cur, a);
        rev.push_back(a);
        cur = n;
        break;
      }
    }
  }
  return {rev.rbegin(), rev.rend()};
}

/// Cells visited when replaying `actions` from `from`, including `from`.
/// Throws InvalidMaze on a blocked move.
inline std::vector<Cell> replay(const MazeSpec& m, Cell from, const ActionSeq& actions)
{
  std::vector<Cell> cells{from};
  for (std::size_t i = 0; i < actions.size(); ++i) {
    const Cell next = step(cells.back(), actions[i]);
    if (m.blocked(cells.back(), next)) {
      fail(ErrorCode::InvalidMaze, "action " + std::to_string(i) + " leaves the grid or crosses a wall");
    }
    cells.push_back(next);
  }
  return cells;
}

/// Checks the spanning-tree and endpoint invariants. `min_size` relaxes the
/// grid bound for generator-internal use.
inline void validate_maze(const MazeSpec& m, int min_size = 3, int max_size = 12)
{
  if (m.rows < min_size || m.cols < min_size || m.rows > max_size || m.cols > max_size) {
    fail(ErrorCode::InvalidMaze, "grid size outside [" + std::to_string(min_size) + "," + std::to_string(max_size) + "]");
  }
  if (m.wall_east.size() != static_cast<std::size_t>(m.rows) * (m.cols - 1) ||
      m.wall_south.size() != static_cast<std::size_t>(m.rows - 1) * m.cols) {
    fail(ErrorCode::InvalidMaze, "wall tables do not match grid size");
  }
  if (m.open_passages() != m.cell_count() - 1) fail(ErrorCode::InvalidMaze, "maze is not a spanning tree");
  const auto dist = bfs_distances(m, {0, 0});
  if (std::any_of(dist.begin(), dist.end(), [](int d) { return d < 0; })) {
    fail(ErrorCode::InvalidMaze, "maze is not connected");
  }
  if (!m.in_bounds(m.start) || !m.in_bounds(m.goal)) fail(ErrorCode::InvalidMaze, "start or goal out of bounds");
  if (m.start == m.goal) fail(ErrorCode::InvalidMaze, "start equals goal");
}

/// Longest tree distance in the maze (its diameter), via two BFS sweeps.
inline int maze_diameter(const MazeSpec& m)
{
  auto far = [&](Cell from) {
    const auto d = bfs_distances(m, from);
    const auto it = std::max_element(d.begin(), d.end());
    return std::pair{m.cell_at(static_cast<int>(it - d.begin())), *it};
  };
  return far(far({0, 0}).first).second;
}

}  // namespace fpb
