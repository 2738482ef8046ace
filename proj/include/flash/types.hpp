#ifndef FLASH_TYPES_HPP
#define FLASH_TYPES_HPP

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace flash {

// Currency amounts are integer atomic units (e.g. cents or satoshi).
using Amount = std::int64_t;

// Node identifier, unique within a topology. Fits a u32 on the wire.
using NodeId = std::uint32_t;

// A path is an ordered node sequence, length >= 2, no repeated node,
// every consecutive pair an open channel direction.
using Path = std::vector<NodeId>;

// Proportional fee rates are stored in parts-per-million so that fee
// arithmetic stays exact in integers: rate = ppm / 1e6.
inline constexpr std::uint64_t kPpmScale = 1'000'000;

struct FeeSchedule {
    Amount base = 0;               // flat per-use fee, >= 0
    std::uint64_t rate_ppm = 0;    // proportional rate, < 1e6 (i.e. < 100%)

    bool operator==(const FeeSchedule&) const = default;
};

// Exact positive rational, used for capacity scaling.
struct Ratio {
    std::int64_t num = 1;
    std::int64_t den = 1;
};

// Parses decimal strings like "10", "0.5", "1.25" into an exact Ratio.
Ratio parse_decimal_ratio(const std::string& text);

// Thrown on violated preconditions and malformed configuration.
class InvalidParameter : public std::runtime_error {
  public:
    explicit InvalidParameter(const std::string& what) : std::runtime_error(what) {}
};

// Thrown on unreadable or malformed input files.
class IoError : public std::runtime_error {
  public:
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

class ParseError : public std::runtime_error {
  public:
    ParseError(const std::string& what, std::size_t line)
        : std::runtime_error(what + " (line " + std::to_string(line) + ")"), line_(line) {}

    std::size_t line() const { return line_; }

  private:
    std::size_t line_;
};

inline bool path_is_simple(const Path& path) {
    if (path.size() < 2) return false;
    for (std::size_t i = 0; i < path.size(); ++i)
        for (std::size_t j = i + 1; j < path.size(); ++j)
            if (path[i] == path[j]) return false;
    return true;
}

}  // namespace flash

#endif  // FLASH_TYPES_HPP
