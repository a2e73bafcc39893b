#pragma once

#include <string>
#include <vector>

namespace spritecheck {

// tp / (tp + fn). Throws when tp + fn == 0.
double accuracy(long long tp, long long fn);

// One decimal place, ties away from zero, computed in integer per-mille:
// (107, 133) -> "44.6%".
std::string format_percent(long long tp, long long fn);

enum class PValueMethod { exact, normal };
std::string to_string(PValueMethod method);

struct MannWhitney {
    double u_x = 0.0;  // rank-sum statistic of x (midranks for ties)
    double u_y = 0.0;  // u_x + u_y == |x| * |y|
    double z = 0.0;
    double p = 1.0;  // two-sided
    PValueMethod method = PValueMethod::normal;

    friend bool operator==(const MannWhitney&, const MannWhitney&) = default;
};

// Samples with |x| + |y| <= kExactLimit use the exact permutation
// distribution of the midrank sum; larger samples use the normal
// approximation with tie-corrected variance and continuity correction.
inline constexpr int kExactLimit = 20;

MannWhitney mann_whitney_u(const std::vector<double>& x, const std::vector<double>& y);
MannWhitney mann_whitney_u_normal(const std::vector<double>& x, const std::vector<double>& y);

enum class EffectLabel { negligible, small, medium, large };
std::string to_string(EffectLabel label);
EffectLabel effect_label_from_string(const std::string& name);

// Boundaries belong to the lower label: |d| == 0.147 is negligible.
EffectLabel effect_label(double d);

struct EffectSize {
    double d = 0.0;
    EffectLabel label = EffectLabel::negligible;

    friend bool operator==(const EffectSize&, const EffectSize&) = default;
};

// d = (#{x_i > y_j} - #{x_i < y_j}) / (|x| |y|), in O((m + n) log n).
EffectSize cliffs_delta(const std::vector<double>& x, const std::vector<double>& y);

// Five-number summary plus mean. Quartiles interpolate linearly between
// order statistics at position q * (n - 1).
struct Summary {
    long long count = 0;
    double min = 0.0;
    double q1 = 0.0;
    double median = 0.0;
    double q3 = 0.0;
    double max = 0.0;
    double mean = 0.0;

    friend bool operator==(const Summary&, const Summary&) = default;
};

Summary summarize(std::vector<double> values);

}  // namespace spritecheck
