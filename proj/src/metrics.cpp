#include "spritecheck/metrics.hpp"

#include <fcntl.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "spritecheck/png_io.hpp"

namespace spritecheck {

namespace {

void check_pair(const Bitmap& a, const Bitmap& b) {
    if (a.width() != b.width() || a.height() != b.height()) throw Error("image dimension mismatch");
    if (a.empty()) throw Error("empty image");
}

// Sums of x, y, x^2, y^2, xy over every window position, one channel at a
// time, via running column sums. Exact in 64-bit integers.
struct WindowSums {
    std::int64_t sx, sy, sxx, syy, sxy;
};

}  // namespace

std::string to_string(MetricKind kind) {
    switch (kind) {
        case MetricKind::PCT: return "PCT";
        case MetricKind::MSE: return "MSE";
        case MetricKind::SSIM: return "SSIM";
        case MetricKind::ESIM: return "ESIM";
    }
    return "PCT";
}

MetricKind metric_from_string(const std::string& name) {
    std::string upper = name;
    std::transform(upper.begin(), upper.end(), upper.begin(), [](unsigned char c) { return std::toupper(c); });
    if (upper == "PCT") return MetricKind::PCT;
    if (upper == "MSE") return MetricKind::MSE;
    if (upper == "SSIM") return MetricKind::SSIM;
    if (upper == "ESIM") return MetricKind::ESIM;
    throw Error("unknown metric '" + name + "'");
}

Polarity polarity(MetricKind kind) {
    return kind == MetricKind::MSE ? Polarity::lower_is_similar : Polarity::higher_is_similar;
}

double pct(const Bitmap& a, const Bitmap& b) {
    check_pair(a, b);
    const auto pa = a.bytes();
    const auto pb = b.bytes();
    std::size_t same = 0;
    for (std::size_t i = 0; i < pa.size(); i += 4) {
        if (pa[i] == pb[i] && pa[i + 1] == pb[i + 1] && pa[i + 2] == pb[i + 2]) ++same;
    }
    return static_cast<double>(same) / static_cast<double>(a.pixel_count());
}

double mse(const Bitmap& a, const Bitmap& b) {
    check_pair(a, b);
    const auto pa = a.bytes();
    const auto pb = b.bytes();
    std::int64_t sum = 0;
    for (std::size_t i = 0; i < pa.size(); i += 4) {
        for (std::size_t k = 0; k < 3; ++k) {
            const std::int64_t d = static_cast<std::int64_t>(pa[i + k]) - pb[i + k];
            sum += d * d;
        }
    }
    return static_cast<double>(sum) / (3.0 * static_cast<double>(a.pixel_count()));
}

double ssim(const Bitmap& a, const Bitmap& b, const SsimParams& params) {
    if (a.width() != b.width() || a.height() != b.height()) throw Error("image dimension mismatch");
    const int win = params.window;
    if (win < 3 || win % 2 == 0) throw Error("SSIM window must be odd and >= 3");
    if (!(params.k1 > 0.0) || !(params.k2 > 0.0)) throw Error("SSIM constants must be positive");
    if (a.width() < win || a.height() < win) throw Error("image too small for SSIM window");

    const int w = a.width();
    const int h = a.height();
    const int out_w = w - win + 1;
    const int out_h = h - win + 1;
    const std::int64_t n = static_cast<std::int64_t>(win) * win;
    const double nd = static_cast<double>(n);
    const double c1 = (params.k1 * params.data_range) * (params.k1 * params.data_range);
    const double c2 = (params.k2 * params.data_range) * (params.k2 * params.data_range);
    const double var_den = nd * (nd - 1.0);

    std::vector<WindowSums> cols(static_cast<std::size_t>(w));
    double channel_total = 0.0;
    for (int ch = 0; ch < 3; ++ch) {
        std::fill(cols.begin(), cols.end(), WindowSums{0, 0, 0, 0, 0});
        auto add_row = [&](int y, int sign) {
            const std::uint8_t* ra = a.row(y);
            const std::uint8_t* rb = b.row(y);
            for (int x = 0; x < w; ++x) {
                const std::int64_t xa = ra[static_cast<std::size_t>(x) * 4 + ch];
                const std::int64_t xb = rb[static_cast<std::size_t>(x) * 4 + ch];
                WindowSums& c = cols[static_cast<std::size_t>(x)];
                c.sx += sign * xa;
                c.sy += sign * xb;
                c.sxx += sign * xa * xa;
                c.syy += sign * xb * xb;
                c.sxy += sign * xa * xb;
            }
        };
        for (int y = 0; y < win; ++y) add_row(y, +1);

        double sum = 0.0;
        for (int y = 0; y < out_h; ++y) {
            WindowSums s{0, 0, 0, 0, 0};
            for (int x = 0; x < win; ++x) {
                const WindowSums& c = cols[static_cast<std::size_t>(x)];
                s.sx += c.sx;
                s.sy += c.sy;
                s.sxx += c.sxx;
                s.syy += c.syy;
                s.sxy += c.sxy;
            }
            for (int x = 0; x < out_w; ++x) {
                if (x > 0) {
                    const WindowSums& out = cols[static_cast<std::size_t>(x - 1)];
                    const WindowSums& in = cols[static_cast<std::size_t>(x + win - 1)];
                    s.sx += in.sx - out.sx;
                    s.sy += in.sy - out.sy;
                    s.sxx += in.sxx - out.sxx;
                    s.syy += in.syy - out.syy;
                    s.sxy += in.sxy - out.sxy;
                }
                const double ux = static_cast<double>(s.sx) / nd;
                const double uy = static_cast<double>(s.sy) / nd;
                // Sample (co)variances, N/(N-1) normalised, from exact integer moments.
                const double vx = static_cast<double>(n * s.sxx - s.sx * s.sx) / var_den;
                const double vy = static_cast<double>(n * s.syy - s.sy * s.sy) / var_den;
                const double vxy = static_cast<double>(n * s.sxy - s.sx * s.sy) / var_den;
                const double uxy = ux * uy;
                const double num = (2.0 * uxy + c1) * (2.0 * vxy + c2);
                const double den = (ux * ux + uy * uy + c1) * (vx + vy + c2);
                sum += num / den;
            }
            if (y + win < h) {
                add_row(y, -1);
                add_row(y + win, +1);
            }
        }
        channel_total += sum / (static_cast<double>(out_w) * static_cast<double>(out_h));
    }
    return channel_total / 3.0;
}

double cosine_similarity(std::span<const double> u, std::span<const double> v) {
    if (u.size() != v.size()) throw Error("vector length mismatch");
    double uu = 0.0;
    double vv = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        uu += u[i] * u[i];
        vv += v[i] * v[i];
    }
    const double nu = std::sqrt(uu);
    const double nv = std::sqrt(vv);
    constexpr double kTiny = 1e-12;
    if (nu < kTiny && nv < kTiny) return 1.0;
    if (nu < kTiny || nv < kTiny) return 0.0;
    // u.v / (|u||v|) == 1 - |u/|u| - v/|v||^2 / 2, which stays exact for
    // identical inputs and resolves near-parallel vectors better.
    double diff = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double d = u[i] / nu - v[i] / nv;
        diff += d * d;
    }
    return std::clamp(1.0 - 0.5 * diff, -1.0, 1.0);
}

std::vector<double> default_embedding(const Bitmap& image) {
    if (image.empty()) throw Error("empty image");
    constexpr int kGrid = 16;
    const int w = image.width();
    const int h = image.height();

    // Area resampling to 16x16 in exact integer arithmetic: in coordinates
    // scaled by 16, source pixel p spans [16p, 16p+16) and output cell k spans
    // [kL, (k+1)L), so every overlap is an integer.
    struct Span {
        int cell;
        std::int64_t weight;
    };
    auto spans_for = [](int length) {
        std::vector<std::vector<Span>> out(static_cast<std::size_t>(length));
        for (int p = 0; p < length; ++p) {
            const std::int64_t p0 = 16LL * p;
            const std::int64_t p1 = p0 + 16;
            for (int k = static_cast<int>(p0 / length); k < kGrid; ++k) {
                const std::int64_t c0 = static_cast<std::int64_t>(k) * length;
                const std::int64_t c1 = c0 + length;
                if (c0 >= p1) break;
                const std::int64_t ov = std::min(p1, c1) - std::max(p0, c0);
                if (ov > 0) out[static_cast<std::size_t>(p)].push_back({k, ov});
            }
        }
        return out;
    };
    const auto xs = spans_for(w);
    const auto ys = spans_for(h);

    std::vector<std::int64_t> acc(kGrid * kGrid * 3, 0);
    std::vector<std::int64_t> row_acc(kGrid * 3);
    for (int y = 0; y < h; ++y) {
        std::fill(row_acc.begin(), row_acc.end(), 0);
        const std::uint8_t* r = image.row(y);
        for (int x = 0; x < w; ++x) {
            const std::uint8_t* p = r + static_cast<std::size_t>(x) * 4;
            for (const Span& s : xs[static_cast<std::size_t>(x)]) {
                for (int ch = 0; ch < 3; ++ch) row_acc[static_cast<std::size_t>(s.cell * 3 + ch)] += s.weight * p[ch];
            }
        }
        for (const Span& s : ys[static_cast<std::size_t>(y)]) {
            for (int i = 0; i < kGrid * 3; ++i) {
                acc[static_cast<std::size_t>(s.cell * kGrid * 3 + i)] += s.weight * row_acc[static_cast<std::size_t>(i)];
            }
        }
    }
    const double norm = static_cast<double>(w) * static_cast<double>(h);
    std::vector<double> small(kGrid * kGrid * 3);
    for (std::size_t i = 0; i < small.size(); ++i) small[i] = static_cast<double>(acc[i]) / norm;

    auto sample = [&](int cx, int cy, int ch) { return small[static_cast<std::size_t>((cy * kGrid + cx) * 3 + ch)]; };

    std::vector<double> out;
    out.reserve(256);
    for (int ch = 0; ch < 3; ++ch) {
        for (int gy = 0; gy < 8; ++gy) {
            for (int gx = 0; gx < 8; ++gx) {
                const double s = sample(2 * gx, 2 * gy, ch) + sample(2 * gx + 1, 2 * gy, ch) +
                                 sample(2 * gx, 2 * gy + 1, ch) + sample(2 * gx + 1, 2 * gy + 1, ch);
                out.push_back(s / 4.0);
            }
        }
    }

    std::vector<double> luma(kGrid * kGrid);
    for (int y = 0; y < kGrid; ++y) {
        for (int x = 0; x < kGrid; ++x) {
            luma[static_cast<std::size_t>(y * kGrid + x)] =
                0.299 * sample(x, y, 0) + 0.587 * sample(x, y, 1) + 0.114 * sample(x, y, 2);
        }
    }
    std::vector<double> grad(kGrid * kGrid);
    for (int y = 0; y < kGrid; ++y) {
        for (int x = 0; x < kGrid; ++x) {
            const double l = luma[static_cast<std::size_t>(y * kGrid + x)];
            const double gx = x + 1 < kGrid ? luma[static_cast<std::size_t>(y * kGrid + x + 1)] - l : 0.0;
            const double gy = y + 1 < kGrid ? luma[static_cast<std::size_t>((y + 1) * kGrid + x)] - l : 0.0;
            grad[static_cast<std::size_t>(y * kGrid + x)] = std::sqrt(gx * gx + gy * gy) / std::sqrt(2.0);
        }
    }
    for (int gy = 0; gy < 8; ++gy) {
        for (int gx = 0; gx < 8; ++gx) {
            const double s = grad[static_cast<std::size_t>(2 * gy * kGrid + 2 * gx)] +
                             grad[static_cast<std::size_t>(2 * gy * kGrid + 2 * gx + 1)] +
                             grad[static_cast<std::size_t>((2 * gy + 1) * kGrid + 2 * gx)] +
                             grad[static_cast<std::size_t>((2 * gy + 1) * kGrid + 2 * gx + 1)];
            out.push_back(s / 4.0);
        }
    }
    return out;
}

std::vector<double> DefaultEmbedding::embed(const Bitmap& image) const { return default_embedding(image); }

ExternalEmbeddingProvider::ExternalEmbeddingProvider(std::string command) : command_(std::move(command)) {
    if (command_.empty()) throw Error("external embedding provider: empty command");
    Bitmap probe(8, 8, {128, 128, 128, 255});
    dimension_ = static_cast<int>(embed(probe).size());
}

std::string ExternalEmbeddingProvider::name() const {
    return "external:" + std::filesystem::path(command_).filename().string();
}

int ExternalEmbeddingProvider::dimension() const {
    std::lock_guard lock(mutex_);
    return dimension_;
}

std::vector<double> ExternalEmbeddingProvider::embed(const Bitmap& image) const {
    const auto png = encode_png(image);

    char in_template[] = "/tmp/spritecheck-esim-XXXXXX";
    const int in_fd = mkstemp(in_template);
    if (in_fd < 0) throw Error(name() + ": cannot create temporary file");
    const std::string in_path = in_template;
    std::size_t written = 0;
    while (written < png.size()) {
        const ssize_t r = ::write(in_fd, png.data() + written, png.size() - written);
        if (r <= 0) {
            ::close(in_fd);
            std::filesystem::remove(in_path);
            throw Error(name() + ": cannot write temporary file");
        }
        written += static_cast<std::size_t>(r);
    }
    ::lseek(in_fd, 0, SEEK_SET);

    int out_pipe[2];
    if (::pipe(out_pipe) != 0) {
        ::close(in_fd);
        std::filesystem::remove(in_path);
        throw Error(name() + ": pipe failed");
    }
    const pid_t pid = ::fork();
    if (pid == 0) {
        ::dup2(in_fd, STDIN_FILENO);
        ::dup2(out_pipe[1], STDOUT_FILENO);
        ::close(out_pipe[0]);
        ::close(out_pipe[1]);
        ::close(in_fd);
        ::execl("/bin/sh", "sh", "-c", command_.c_str(), static_cast<char*>(nullptr));
        ::_exit(127);
    }
    ::close(out_pipe[1]);
    ::close(in_fd);
    std::string output;
    char buf[4096];
    ssize_t r = 0;
    while ((r = ::read(out_pipe[0], buf, sizeof buf)) > 0) output.append(buf, static_cast<std::size_t>(r));
    ::close(out_pipe[0]);
    int status = 0;
    if (pid > 0) ::waitpid(pid, &status, 0);
    std::filesystem::remove(in_path);
    if (pid < 0) throw Error(name() + ": fork failed");
    if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) throw Error(name() + ": provider exited with failure");

    std::istringstream in(output);
    long long length = -1;
    if (!(in >> length) || length <= 0) throw Error(name() + ": malformed vector header");
    std::vector<double> out(static_cast<std::size_t>(length));
    for (auto& v : out) {
        if (!(in >> v) || !std::isfinite(v)) throw Error(name() + ": malformed vector values");
    }
    std::lock_guard lock(mutex_);
    if (dimension_ != 0 && static_cast<int>(out.size()) != dimension_) {
        throw Error(name() + ": dimension mismatch between calls");
    }
    return out;
}

const EmbeddingProvider& default_provider() {
    static const DefaultEmbedding provider;
    return provider;
}

std::shared_ptr<const EmbeddingProvider> provider_from_environment() {
    if (const char* cmd = std::getenv(kProviderEnv); cmd != nullptr && *cmd != '\0') {
        return std::make_shared<ExternalEmbeddingProvider>(cmd);
    }
    return std::make_shared<DefaultEmbedding>();
}

double esim(const Bitmap& a, const Bitmap& b, const EmbeddingProvider& provider) {
    check_pair(a, b);
    std::vector<double> u;
    std::vector<double> v;
    try {
        u = provider.embed(a);
        v = provider.embed(b);
    } catch (const Error& e) {
        const std::string what = e.what();
        if (what.rfind(provider.name(), 0) == 0) throw;
        throw Error(provider.name() + ": " + what);
    }
    const auto dim = static_cast<std::size_t>(provider.dimension());
    if (u.size() != v.size() || u.size() != dim) throw Error(provider.name() + ": embedding dimension mismatch");
    return cosine_similarity(u, v);
}

double compute_metric(const Bitmap& a, const Bitmap& b, MetricKind kind, const MetricConfig& config) {
    switch (kind) {
        case MetricKind::PCT: return pct(a, b);
        case MetricKind::MSE: return mse(a, b);
        case MetricKind::SSIM: return ssim(a, b, config.ssim);
        case MetricKind::ESIM: return esim(a, b, config.provider ? *config.provider : default_provider());
    }
    throw Error("unknown metric");
}

MetricScore score(const ImagePair& pair, MetricKind kind, const MetricConfig& config) {
    if (pair.skipped) throw Error("cannot score skipped pair");
    return {pair.node_id, kind, compute_metric(pair.oracle, pair.object, kind, config)};
}

}  // namespace spritecheck
