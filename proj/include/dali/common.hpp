#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace dali {

// Runtime failure with context. CLI maps these to exit code 1.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

enum class GroupLabel { Leadership, Collaborative };

inline const char* to_string(GroupLabel l) {
    return l == GroupLabel::Leadership ? "leadership" : "collaborative";
}

// Binary class probabilities, ordered (leadership, collaborative).
struct ProbPair {
    double leadership = 0.0;
    double collaborative = 0.0;

    // Exact ties resolve to Collaborative.
    GroupLabel argmax() const {
        return leadership > collaborative ? GroupLabel::Leadership
                                          : GroupLabel::Collaborative;
    }
    double sum() const { return leadership + collaborative; }
};

// splitmix64; used to derive independent seeds from a master seed.
inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
    std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace dali
