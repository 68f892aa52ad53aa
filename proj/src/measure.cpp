#include "eqd/measure.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "eqd/errors.hpp"
#include "eqd/fibers.hpp"
#include "eqd/parallel.hpp"
#include "eqd/statistics.hpp"

namespace eqd {

std::string to_string(SampleMethod m) {
    switch (m) {
        case SampleMethod::Tree: return "tree";
        case SampleMethod::Backward: return "backward";
        case SampleMethod::FubiniStudy: return "fubini_study";
    }
    return "?";
}

SampleMethod sample_method_from_string(const std::string& s) {
    if (s == "tree") return SampleMethod::Tree;
    if (s == "backward") return SampleMethod::Backward;
    if (s == "fubini_study") return SampleMethod::FubiniStudy;
    throw Error("unknown sampling method '" + s + "'");
}

namespace {

std::string path_string(const std::vector<std::size_t>& path) {
    std::string s;
    for (std::size_t i = 0; i < path.size(); ++i) s += (i ? "." : "") + std::to_string(path[i]);
    return s.empty() ? "root" : s;
}

[[noreturn]] void rethrow_with_path(const std::vector<std::size_t>& path) {
    const std::string where = "branch " + path_string(path) + ": ";
    try {
        throw;
    } catch (const IndeterminacyPoint& e) {
        throw IndeterminacyPoint(where + e.what(), path.size());
    } catch (const DegenerateFiber& e) {
        throw DegenerateFiber(where + e.what());
    }
}

}  // namespace

SampleSet pullback_tree(const DynMap& map, const ProjPoint& a, int n) {
    if (a.dim() != map.dim()) throw DimMismatch("start point and map live on different spaces");
    if (n < 0) throw Error("tree depth must be non-negative");
    const int d_t = degrees(map).d_t;
    if (n * std::log(static_cast<double>(d_t)) > std::log(kTreeLimit) + 1e-9)
        throw TreeTooLarge("pullback tree with " + std::to_string(d_t) + "^" + std::to_string(n) +
                           " branches exceeds the 1e6 limit");

    struct Node {
        ProjPoint point;
        double weight;
        std::vector<std::size_t> path;
    };
    std::vector<Node> level{{a, 1.0, {}}};
    for (int depth = 0; depth < n; ++depth) {
        std::vector<Node> next;
        next.reserve(level.size() * static_cast<std::size_t>(d_t));
        for (auto& node : level) {
            Fiber f;
            try {
                f = fiber(map, node.point);
            } catch (const IndeterminacyPoint&) {
                rethrow_with_path(node.path);
            } catch (const DegenerateFiber&) {
                rethrow_with_path(node.path);
            }
            for (std::size_t k = 0; k < f.points.size(); ++k) {
                auto path = node.path;
                path.push_back(k);
                next.push_back({f.points[k].point, node.weight * f.points[k].multiplicity / d_t, std::move(path)});
            }
        }
        level = std::move(next);
    }

    SampleSet s;
    s.dim = map.dim();
    s.uniform = true;
    for (const auto& node : level) {
        s.points.push_back(node.point);
        s.weights.push_back(node.weight);
        if (node.weight != level.front().weight) s.uniform = false;
    }
    s.provenance = {map.hash(), SampleMethod::Tree, n, 0, s.points.size()};
    return s;
}

std::vector<ProjPoint> backward_path(const DynMap& map, const ProjPoint& start, std::size_t length, Stream& rng) {
    std::vector<ProjPoint> path{start};
    path.reserve(length + 1);
    for (std::size_t k = 0; k < length; ++k) path.push_back(random_preimage(map, path.back(), rng));
    return path;
}

SampleSet backward_orbit_sample(const DynMap& map, const ProjPoint& a, int burn_in, std::size_t N, const Stream& rng,
                                unsigned workers) {
    if (a.dim() != map.dim()) throw DimMismatch("start point and map live on different spaces");
    if (burn_in < 0) throw Error("burn-in must be non-negative");
    const int d_t = degrees(map).d_t;
    // A walk counts as collapsed when its last fibers all reduce to one point.
    const int window = std::min(burn_in, 10);

    enum class Outcome : unsigned char { Ok, Collapsed, Dropped };
    std::vector<ProjPoint> end(N, a);
    std::vector<Outcome> outcome(N, Outcome::Ok);
    parallel_for(N, workers, [&](std::size_t i) {
        Stream s = rng.child(i);
        ProjPoint x = a;
        int single = 0;
        try {
            for (int k = 0; k < burn_in; ++k) {
                const Fiber f = fiber(map, x);
                single = f.points.size() == 1 ? single + 1 : 0;
                x = pick(f, d_t, s);
            }
        } catch (const IndeterminacyPoint&) {
            outcome[i] = Outcome::Dropped;
            return;
        }
        end[i] = x;
        if (window > 0 && single >= window) outcome[i] = Outcome::Collapsed;
    });

    SampleSet out;
    out.dim = map.dim();
    std::size_t collapsed = 0;
    for (std::size_t i = 0; i < N; ++i) {
        if (outcome[i] == Outcome::Dropped) {
            ++out.dropped;
            continue;
        }
        if (outcome[i] == Outcome::Collapsed) ++collapsed;
        out.points.push_back(end[i]);
    }
    if (N > 0 && static_cast<double>(collapsed) > 0.01 * static_cast<double>(N))
        throw ExceptionalStart(std::to_string(collapsed) + " of " + std::to_string(N) +
                               " backward walks collapsed; start point " + a.to_string() + " looks exceptional");
    if (out.points.empty()) throw ExceptionalStart("every backward walk from " + a.to_string() + " was lost");
    out.weights.assign(out.points.size(), 1.0 / static_cast<double>(out.points.size()));
    out.provenance = {map.hash(), SampleMethod::Backward, burn_in, rng.seed(), out.points.size()};
    return out;
}

SampleSet fubini_study_sample(int dim, std::size_t N, const Stream& rng) {
    SampleSet out;
    out.dim = dim;
    out.points.reserve(N);
    Stream s = rng;
    for (std::size_t i = 0; i < N; ++i) out.points.push_back(sample_fubini_study(s, dim));
    out.weights.assign(N, N ? 1.0 / static_cast<double>(N) : 0.0);
    out.provenance = {"-", SampleMethod::FubiniStudy, 0, rng.seed(), N};
    return out;
}

Integral integrate_values(const SampleSet& s, const std::vector<double>& values) {
    if (values.size() != s.size()) throw Error("value count does not match the sample set");
    Integral out;
    std::vector<double> kept, w;
    kept.reserve(values.size());
    double lost = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (values[i] == -std::numeric_limits<double>::infinity()) {
            ++out.dropped;
            lost += s.weights[i];
            continue;
        }
        if (!std::isfinite(values[i])) throw Error("observable returned a non-finite value other than -infinity");
        kept.push_back(values[i]);
        w.push_back(s.weights[i]);
    }
    out.polar_warning = lost > 0.01;
    if (kept.empty()) {
        out.mean = -std::numeric_limits<double>::infinity();
        return out;
    }
    const MeanEstimate m = s.uniform && s.provenance.method != SampleMethod::Tree ? batch_means(kept) : weighted_mean(kept, w);
    out.mean = m.mean;
    out.std_err = m.std_err;
    return out;
}

Integral integrate(const SampleSet& s, const Observable& phi) {
    std::vector<double> values(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) values[i] = phi(s.points[i]);
    return integrate_values(s, values);
}

std::string format_sample_set(const SampleSet& s) {
    std::string out;
    char buf[64];
    out += "EQD1 " + std::to_string(s.dim) + " " + std::to_string(s.size()) + " " + to_string(s.provenance.method) +
           " " + std::to_string(s.provenance.depth) + " " + std::to_string(s.provenance.seed) + " " +
           s.provenance.map_hash + "\n";
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s.uniform) {
            out += "*";
        } else {
            std::snprintf(buf, sizeof buf, "%.17g", s.weights[i]);
            out += buf;
        }
        for (int k = 0; k < s.points[i].size(); ++k) {
            const cplx c = s.points[i][k];
            std::snprintf(buf, sizeof buf, " %.17g %.17g", c.real(), c.imag());
            out += buf;
        }
        out += "\n";
    }
    return out;
}

void write_sample_set(const SampleSet& s, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot write " + path);
    f << format_sample_set(s);
    if (!f) throw Error("write failed for " + path);
}

SampleSet parse_sample_set(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    auto fail = [&](const std::string& why) -> ParseError { return ParseError("sample file: " + why, lineno); };

    if (!std::getline(in, line)) throw fail("empty input");
    std::istringstream head(line);
    std::string magic, method;
    SampleSet s;
    std::size_t count = 0;
    if (!(head >> magic >> s.dim >> count >> method >> s.provenance.depth >> s.provenance.seed >> s.provenance.map_hash) ||
        magic != "EQD1")
        throw fail("bad header");
    if (s.dim != 1 && s.dim != 2) throw fail("dimension must be 1 or 2");
    try {
        s.provenance.method = sample_method_from_string(method);
    } catch (const Error&) {
        throw fail("unknown method '" + method + "'");
    }
    s.provenance.count = count;

    std::vector<cplx> coords(static_cast<std::size_t>(s.dim + 1));
    bool any_star = false, any_weight = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string w;
        row >> w;
        for (auto& c : coords) {
            double re, im;
            if (!(row >> re >> im)) throw fail("expected " + std::to_string(2 * (s.dim + 1)) + " coordinates");
            c = {re, im};
        }
        std::string extra;
        if (row >> extra) throw fail("trailing fields");
        if (w == "*") {
            any_star = true;
            s.weights.push_back(0.0);
        } else {
            char* end = nullptr;
            const double v = std::strtod(w.c_str(), &end);
            if (*end != '\0' || !(v > 0.0)) throw fail("weight must be positive or '*'");
            any_weight = true;
            s.weights.push_back(v);
        }
        s.points.push_back(ProjPoint::normalize(coords));
    }
    if (s.points.size() != count) throw fail("header announces " + std::to_string(count) + " samples");
    if (any_star && any_weight) throw fail("mixed '*' and explicit weights");
    s.uniform = !any_weight;
    if (s.uniform) {
        s.weights.assign(count, count ? 1.0 / static_cast<double>(count) : 0.0);
    } else {
        const double total = std::accumulate(s.weights.begin(), s.weights.end(), 0.0);
        if (std::abs(total - 1.0) > 1e-12) throw fail("weights do not sum to 1");
    }
    return s;
}

SampleSet read_sample_set(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error("cannot read " + path);
    std::stringstream buf;
    buf << f.rdbuf();
    return parse_sample_set(buf.str());
}

}  // namespace eqd
