#include "tde3/types.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>

namespace tde3 {

std::string_view direction_name(Direction d) {
  switch (d) {
    case Direction::LeftRight: return "L-R";
    case Direction::RightLeft: return "R-L";
    case Direction::TopBottom: return "T-B";
    case Direction::BottomTop: return "B-T";
  }
  throw std::invalid_argument("invalid direction");
}

Direction parse_direction(std::string_view s) {
  std::string key;
  for (char c : s)
    if (c != '-' && c != '_') key.push_back(static_cast<char>(std::toupper(c)));
  if (key == "LR") return Direction::LeftRight;
  if (key == "RL") return Direction::RightLeft;
  if (key == "TB") return Direction::TopBottom;
  if (key == "BT") return Direction::BottomTop;
  throw std::invalid_argument("unknown direction '" + std::string(s) + "'");
}

Step motion_step(Direction d) {
  switch (d) {
    case Direction::LeftRight: return {1, 0};
    case Direction::RightLeft: return {-1, 0};
    case Direction::TopBottom: return {0, 1};
    case Direction::BottomTop: return {0, -1};
  }
  throw std::invalid_argument("invalid direction");
}

}  // namespace tde3
