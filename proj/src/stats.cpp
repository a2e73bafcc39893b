#include "spritecheck/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "spritecheck/error.hpp"

namespace spritecheck {

namespace {

struct Ranked {
    std::vector<double> ranks_x;  // midranks of x within the pooled sample
    double tie_term = 0.0;        // sum over tie groups of t^3 - t
};

Ranked rank_pooled(const std::vector<double>& x, const std::vector<double>& y) {
    struct Item {
        double v;
        bool from_x;
    };
    std::vector<Item> all;
    all.reserve(x.size() + y.size());
    for (double v : x) all.push_back({v, true});
    for (double v : y) all.push_back({v, false});
    std::sort(all.begin(), all.end(), [](const Item& a, const Item& b) { return a.v < b.v; });
    Ranked r;
    r.ranks_x.reserve(x.size());
    std::size_t i = 0;
    while (i < all.size()) {
        std::size_t j = i;
        while (j < all.size() && all[j].v == all[i].v) ++j;
        const double mid = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        const double t = static_cast<double>(j - i);
        r.tie_term += t * t * t - t;
        for (std::size_t k = i; k < j; ++k) {
            if (all[k].from_x) r.ranks_x.push_back(mid);
        }
        i = j;
    }
    return r;
}

void check_samples(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.empty() || y.empty()) throw Error("statistics require two nonempty samples");
    for (double v : x) {
        if (std::isnan(v)) throw Error("sample contains NaN");
    }
    for (double v : y) {
        if (std::isnan(v)) throw Error("sample contains NaN");
    }
}

// Doubled midranks of the pooled sample, so every rank is an integer.
std::vector<int> doubled_ranks(std::vector<double> pooled) {
    std::sort(pooled.begin(), pooled.end());
    std::vector<int> out;
    out.reserve(pooled.size());
    std::size_t i = 0;
    while (i < pooled.size()) {
        std::size_t j = i;
        while (j < pooled.size() && pooled[j] == pooled[i]) ++j;
        const int twice_mid = static_cast<int>(i + 1 + j);
        for (std::size_t k = i; k < j; ++k) out.push_back(twice_mid);
        i = j;
    }
    return out;
}

double exact_p(const std::vector<double>& x, const std::vector<double>& y, double u_x) {
    const int n1 = static_cast<int>(x.size());
    const int n = n1 + static_cast<int>(y.size());
    std::vector<double> pooled(x);
    pooled.insert(pooled.end(), y.begin(), y.end());
    const std::vector<int> ranks = doubled_ranks(pooled);
    const int max_sum = std::accumulate(ranks.begin(), ranks.end(), 0);
    // ways[k][s]: subsets of size k with doubled rank sum s.
    std::vector<std::vector<double>> ways(static_cast<std::size_t>(n1) + 1,
                                          std::vector<double>(static_cast<std::size_t>(max_sum) + 1, 0.0));
    ways[0][0] = 1.0;
    for (int r : ranks) {
        for (int k = n1; k >= 1; --k) {
            auto& dst = ways[static_cast<std::size_t>(k)];
            const auto& src = ways[static_cast<std::size_t>(k - 1)];
            for (int s = max_sum; s >= r; --s) dst[static_cast<std::size_t>(s)] += src[static_cast<std::size_t>(s - r)];
        }
    }
    // Doubled rank sum T relates to U by T = 2U + n1 (n1 + 1); its mean is n1 (n + 1).
    const long long centre = static_cast<long long>(n1) * (n + 1);
    const long long t_obs = std::llround(2.0 * u_x) + static_cast<long long>(n1) * (n1 + 1);
    const long long dev = std::llabs(t_obs - centre);
    double extreme = 0.0;
    double total = 0.0;
    for (int s = 0; s <= max_sum; ++s) {
        const double w = ways[static_cast<std::size_t>(n1)][static_cast<std::size_t>(s)];
        if (w == 0.0) continue;
        total += w;
        if (std::llabs(s - centre) >= dev) extreme += w;
    }
    return std::min(1.0, extreme / total);
}

}  // namespace

double accuracy(long long tp, long long fn) {
    if (tp < 0 || fn < 0) throw Error("accuracy: negative count");
    if (tp + fn == 0) throw Error("accuracy: tp + fn must be positive");
    return static_cast<double>(tp) / static_cast<double>(tp + fn);
}

std::string format_percent(long long tp, long long fn) {
    if (tp < 0 || fn < 0) throw Error("format_percent: negative count");
    const long long total = tp + fn;
    if (total == 0) throw Error("format_percent: tp + fn must be positive");
    const long long permille = (tp * 2000 + total) / (2 * total);
    return std::to_string(permille / 10) + "." + std::to_string(permille % 10) + "%";
}

std::string to_string(PValueMethod method) { return method == PValueMethod::exact ? "exact" : "normal"; }

MannWhitney mann_whitney_u_normal(const std::vector<double>& x, const std::vector<double>& y) {
    check_samples(x, y);
    const double n1 = static_cast<double>(x.size());
    const double n2 = static_cast<double>(y.size());
    const double n = n1 + n2;
    const Ranked r = rank_pooled(x, y);
    const double rank_sum = std::accumulate(r.ranks_x.begin(), r.ranks_x.end(), 0.0);
    MannWhitney out;
    out.u_x = rank_sum - n1 * (n1 + 1.0) / 2.0;
    out.u_y = n1 * n2 - out.u_x;
    out.method = PValueMethod::normal;
    const double mu = n1 * n2 / 2.0;
    const double var = n1 * n2 / 12.0 * ((n + 1.0) - r.tie_term / (n * (n - 1.0)));
    if (!(var > 0.0)) {
        out.z = 0.0;
        out.p = 1.0;
        return out;
    }
    const double dev = std::max(0.0, std::abs(out.u_x - mu) - 0.5);
    out.z = dev / std::sqrt(var);
    out.p = std::min(1.0, std::erfc(out.z / std::sqrt(2.0)));
    return out;
}

MannWhitney mann_whitney_u(const std::vector<double>& x, const std::vector<double>& y) {
    MannWhitney out = mann_whitney_u_normal(x, y);
    if (static_cast<int>(x.size() + y.size()) <= kExactLimit) {
        out.method = PValueMethod::exact;
        out.p = exact_p(x, y, out.u_x);
    }
    return out;
}

std::string to_string(EffectLabel label) {
    switch (label) {
        case EffectLabel::negligible: return "negligible";
        case EffectLabel::small: return "small";
        case EffectLabel::medium: return "medium";
        case EffectLabel::large: return "large";
    }
    return "unknown";
}

EffectLabel effect_label_from_string(const std::string& name) {
    for (auto l : {EffectLabel::negligible, EffectLabel::small, EffectLabel::medium, EffectLabel::large}) {
        if (to_string(l) == name) return l;
    }
    throw Error("unknown effect label '" + name + "'");
}

EffectLabel effect_label(double d) {
    const double a = std::abs(d);
    if (a <= 0.147) return EffectLabel::negligible;
    if (a <= 0.33) return EffectLabel::small;
    if (a <= 0.474) return EffectLabel::medium;
    return EffectLabel::large;
}

EffectSize cliffs_delta(const std::vector<double>& x, const std::vector<double>& y) {
    check_samples(x, y);
    std::vector<double> sorted(y);
    std::sort(sorted.begin(), sorted.end());
    long long greater = 0;
    long long less = 0;
    for (double v : x) {
        const auto lo = std::lower_bound(sorted.begin(), sorted.end(), v);
        const auto hi = std::upper_bound(lo, sorted.end(), v);
        greater += lo - sorted.begin();
        less += sorted.end() - hi;
    }
    EffectSize e;
    e.d = static_cast<double>(greater - less) / (static_cast<double>(x.size()) * static_cast<double>(y.size()));
    e.label = effect_label(e.d);
    return e;
}

Summary summarize(std::vector<double> values) {
    Summary s;
    if (values.empty()) return s;
    std::sort(values.begin(), values.end());
    const auto at = [&](double q) {
        const double pos = q * static_cast<double>(values.size() - 1);
        const auto lo = static_cast<std::size_t>(std::floor(pos));
        const std::size_t hi = std::min(lo + 1, values.size() - 1);
        const double frac = pos - static_cast<double>(lo);
        return values[lo] + (values[hi] - values[lo]) * frac;
    };
    s.count = static_cast<long long>(values.size());
    s.min = values.front();
    s.max = values.back();
    s.q1 = at(0.25);
    s.median = at(0.5);
    s.q3 = at(0.75);
    s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
    return s;
}

}  // namespace spritecheck
