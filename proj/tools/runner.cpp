#include "runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include "eqd/measure.hpp"
#include "eqd/observables.hpp"
#include "eqd/stats.hpp"
#include "eqd/transfer.hpp"
#include "eqd/version.hpp"

namespace eqd::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

enum StreamId : std::uint64_t { kSampleStream = 1, kNormsStream = 2, kCorrelateStream = 3, kCltStream = 4, kTransferStream = 5 };

std::uint64_t stream_id(const std::string& task) {
    if (task == "sample") return kSampleStream;
    if (task == "norms") return kNormsStream;
    if (task == "correlate") return kCorrelateStream;
    if (task == "clt") return kCltStream;
    if (task == "transfer") return kTransferStream;
    return 0;
}

std::string num17(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}


json number(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

class Context {
public:
    Context(const ExperimentConfig& c, const RunOptions& o, fs::path dir)
        : config(c), options(o), out_dir(std::move(dir)), map(DynMap::parse(c.map_spec)) {}

    const ExperimentConfig& config;
    const RunOptions& options;
    fs::path out_dir;
    DynMap map;
    std::optional<SampleSet> samples;
    std::vector<std::string> artifacts;

    void log(const std::string& msg) const {
        if (options.verbose && options.log) *options.log << "[eqd] " << msg << "\n";
    }

    Stream stream(const std::string& task) const { return Stream(config.seed, stream_id(task)); }

    void write(const std::string& name, const std::string& content) {
        const fs::path p = out_dir / name;
        std::ofstream f(p, std::ios::binary);
        if (!f) throw Error("cannot write " + p.string());
        f << content;
        if (!f) throw Error("write failed for " + p.string());
        if (std::find(artifacts.begin(), artifacts.end(), name) == artifacts.end()) artifacts.push_back(name);
    }

    Observable observable(const std::string& name) const { return Observable::parse(config.observable(name)); }
};

void task_degrees(Context& ctx) { ctx.write("degrees.json", degrees_json(ctx.config.map_spec).dump(2) + "\n"); }

void task_sample(Context& ctx) {
    const auto& s = ctx.config.sampler;
    const Stream rng = ctx.stream("sample");
    if (s.method == "fubini_study") {
        ctx.samples = fubini_study_sample(ctx.map.dim(), s.N, rng);
    } else {
        const ProjPoint a = ProjPoint::normalize(s.start);
        if (s.method == "tree")
            ctx.samples = pullback_tree(ctx.map, a, s.depth);
        else
            ctx.samples = backward_orbit_sample(ctx.map, a, s.burn_in, s.N, rng, ctx.options.workers);
    }
    ctx.log("sample: " + std::to_string(ctx.samples->size()) + " points");
    ctx.write("samples.eqd", format_sample_set(*ctx.samples));
}

/// Star norm on P^1, |m(phi)| + Lipschitz estimate as a proxy on P^2.
double phi_star(const Context& ctx, const Observable& phi, std::size_t grid_n, Stream& rng) {
    if (ctx.map.dim() == 1) {
        const SphereNorms n = sphere_norms(phi, grid_n);
        if (n.excluded_area > 0.0) throw NormUnavailable("observable " + phi.spec() + " has poles on the quadrature grid");
        return n.star();
    }
    const LipschitzEstimate lip = lipschitz_estimate(phi, 2000, rng, 2);
    if (!std::isfinite(lip.value)) throw NormUnavailable("no Sobolev proxy for " + phi.spec());
    return std::abs(lebesgue_mean(phi, 20000, rng.child(1), 2).mean) + lip.value;
}

void task_norms(Context& ctx) {
    json list = json::array();
    const Stream base = ctx.stream("norms");
    std::size_t i = 0;
    for (const auto& [name, spec] : ctx.config.observables) {
        const Observable phi = Observable::parse(spec);
        Stream rng = base.child(i++);
        json o;
        o["name"] = name;
        o["spec"] = phi.spec();
        o["kind"] = to_string(phi.kind());
        const LipschitzEstimate lip = lipschitz_estimate(phi, ctx.config.norms.pairs, rng, ctx.map.dim());
        o["lip_est"] = number(lip.value);
        o["lip_is_lower_bound"] = lip.lower_bound;
        if (ctx.map.dim() == 1 && phi.dim() != 2) {
            const SphereNorms n = sphere_norms(phi, ctx.config.norms.grid_n);
            o["star_est"] = number(n.star());
            o["lebesgue_mean"] = number(n.mean);
            o["dirichlet"] = number(n.dirichlet);
            o["l2"] = number(n.l2);
            o["excluded_area"] = n.excluded_area;
            o["grid_cells"] = n.cells;
        } else {
            const LebesgueMean m = lebesgue_mean(phi, ctx.config.norms.grid_n, rng.child(1), ctx.map.dim());
            o["star_est"] = nullptr;
            o["lebesgue_mean"] = number(m.mean);
        }
        if (ctx.samples) {
            const Integral r = integrate(*ctx.samples, phi);
            o["mean_est"] = number(r.mean);
            o["mean_stderr"] = r.std_err;
            o["dropped"] = r.dropped;
            o["polar_warning"] = r.polar_warning;
        }
        list.push_back(o);
    }
    json out;
    out["map"] = ctx.map.spec();
    out["grid_n"] = ctx.config.norms.grid_n;
    out["pairs"] = ctx.config.norms.pairs;
    out["observables"] = list;
    ctx.write("norms.json", out.dump(2) + "\n");
}

void task_correlate(Context& ctx) {
    const auto& c = ctx.config.correlate;
    const Observable psi = ctx.observable(c.psi), phi = ctx.observable(c.phi);
    const CorrelationSeries series = correlation_series(ctx.map, *ctx.samples, psi, phi, c.n_max, ctx.options.workers);
    Stream rng = ctx.stream("correlate");
    double psi_sup = 0.0;
    for (const auto& p : ctx.samples->points) psi_sup = std::max(psi_sup, std::abs(psi(p)));
    const double star = phi_star(ctx, phi, c.grid_n, rng);
    const MixingReport rep = mixing_bound_check(series, ctx.map, star, psi_sup);
    const DecayFit fit = decay_fit(series, 1, -1, rng.child(2));
    ctx.write("correlations.csv", rep.to_csv(series));

    json s;
    s["psi"] = psi.spec();
    s["phi"] = phi.spec();
    s["psi_mean"] = series.meta.psi_mean;
    s["phi_mean"] = series.meta.phi_mean;
    s["psi_sup"] = psi_sup;
    s["phi_star"] = star;
    s["a_emp"] = number(rep.a_emp);
    s["exponent_violation"] = rep.exponent_violation;
    s["dropped"] = series.meta.dropped;
    s["drop_warning"] = series.meta.drop_warning;
    json f;
    f["insufficient_signal"] = fit.insufficient_signal;
    f["rate"] = fit.rate;
    f["ci"] = {fit.ci_lo, fit.ci_hi};
    f["floor_index"] = fit.floor_index;
    f["used"] = fit.used;
    s["decay_fit"] = f;
    ctx.write("correlations_summary.json", s.dump(2) + "\n");
    if (series.meta.drop_warning) ctx.log("correlate: more than 1% of the orbits were dropped");
}

void task_transfer(Context& ctx) {
    const auto& c = ctx.config.transfer;
    const DecompositionTrace t =
        decompose(ctx.map, ctx.observable(c.phi), c.N, c.nodes, ctx.stream("transfer"), ctx.options.workers);
    ctx.write("transfer.csv", t.to_csv());
    json s;
    s["phi"] = ctx.observable(c.phi).spec();
    s["c_phi"] = t.c_phi;
    s["c_phi_stderr"] = t.c_phi_std_err;
    s["quadrature"] = {{"scheme", t.quadrature.scheme},
                       {"nodes", t.quadrature.nodes},
                       {"seed", t.quadrature.seed},
                       {"exact_depth", t.quadrature.exact_depth}};
    ctx.write("transfer_summary.json", s.dump(2) + "\n");
}

void task_clt(Context& ctx) {
    const auto& c = ctx.config.clt;
    const Observable phi = ctx.observable(c.phi);
    CltOptions opt;
    opt.recenter = c.center;
    opt.gk_n_max = c.gk_n_max;
    opt.reference_sigma2 = c.reference_sigma2;
    opt.workers = ctx.options.workers;
    const CltReport r = birkhoff_clt(ctx.map, *ctx.samples, phi, c.n_block, c.trajectories, ctx.stream("clt"), opt);
    std::string csv = "trajectory_stat\n";
    for (double v : r.trajectory_stats) csv += num17(v) + "\n";
    ctx.write("clt_trajectories.csv", csv);
    ctx.write("clt_summary.json", r.summary_json());
}

std::vector<std::string> plan(const ExperimentConfig& config, const RunOptions& options) {
    std::vector<std::string> wanted = options.only ? *options.only : config.tasks;
    const auto has = [&](const std::string& t) { return std::find(wanted.begin(), wanted.end(), t) != wanted.end(); };
    if ((has("correlate") || has("clt")) && !has("sample")) wanted.push_back("sample");
    std::vector<std::string> ordered;
    for (const auto& t : kTaskOrder)
        if (has(t)) ordered.push_back(t);
    return ordered;
}

}  // namespace

json degrees_json(const std::string& map_spec) {
    const DynMap map = DynMap::parse(map_spec);
    const DegreeReport d = degrees(map);
    const auto [holds, margin] = check_hypothesis(map);
    json j;
    j["map"] = map.spec();
    j["family"] = to_string(map.family());
    j["dim"] = map.dim();
    j["degree"] = map.degree();
    j["d_t"] = d.d_t;
    j["d_list"] = d.d_list;
    j["delta_base"] = d.delta_base;
    j["delta_is_leading_order"] = d.delta_is_leading_order;
    std::vector<double> delta;
    for (std::size_t n = 0; n <= 8; ++n) delta.push_back(d.delta(n));
    j["delta_n"] = delta;
    j["hypothesis"] = holds;
    j["margin"] = margin;
    return j;
}

RunResult run(const ExperimentConfig& config, const RunOptions& options) {
    const auto t0 = std::chrono::steady_clock::now();
    RunResult result;
    const fs::path dir = options.out.empty() ? fs::path(config.output) : fs::path(options.out);
    fs::create_directories(dir);
    result.out_dir = dir.string();
    Context ctx(config, options, dir);

    json tasks = json::array();
    const auto [holds, margin] = check_hypothesis(ctx.map);
    const std::vector<std::string> order = plan(config, options);
    bool sample_failed = false;
    for (const auto& name : order) {
        json rec;
        rec["name"] = name;
        const auto ts = std::chrono::steady_clock::now();
        if (!holds && name != "degrees") {
            rec["status"] = "skipped";
            rec["error"] = "degree hypothesis fails (margin " + num17(margin) + ")";
            tasks.push_back(rec);
            continue;
        }
        if (sample_failed && (name == "correlate" || name == "clt")) {
            rec["status"] = "skipped";
            rec["error"] = "sampling failed";
            tasks.push_back(rec);
            continue;
        }
        ctx.log("running " + name);
        try {
            if (name == "degrees") task_degrees(ctx);
            else if (name == "sample") task_sample(ctx);
            else if (name == "norms") task_norms(ctx);
            else if (name == "correlate") task_correlate(ctx);
            else if (name == "transfer") task_transfer(ctx);
            else if (name == "clt") task_clt(ctx);
            rec["status"] = "ok";
        } catch (const HypothesisViolated& e) {
            rec["status"] = "failed";
            rec["error"] = e.what();
            result.exit_code = std::max<int>(result.exit_code, kHypothesisViolated);
        } catch (const std::exception& e) {
            rec["status"] = "failed";
            rec["error"] = e.what();
            if (name == "sample") sample_failed = true;
            if (result.exit_code == kOk) result.exit_code = kNumericalFailure;
            ctx.log(name + " failed: " + e.what());
        }
        rec["seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - ts).count();
        tasks.push_back(rec);
    }
    if (!holds) {
        result.exit_code = kHypothesisViolated;
        if (options.log)
            *options.log << "eqd: degree hypothesis d_t > d_{k-1} fails for " << ctx.map.spec() << " (margin "
                         << num17(margin) << ")\n";
    }

    json m;
    m["tool"] = "eqd";
    m["config"] = config.text;
    m["config_hash"] = fnv1a_hex(config.text);
    m["map"] = {{"spec", ctx.map.spec()}, {"hash", ctx.map.hash()}};
    m["hypothesis"] = {{"holds", holds}, {"margin", margin}};
    m["seed"] = config.seed;
    json streams = json::object();
    for (const auto& name : order)
        if (stream_id(name)) streams[name] = {config.seed, stream_id(name)};
    m["streams"] = streams;
    m["versions"] = {{"eqd", EQD_VERSION}, {"compiler", __VERSION__}, {"cxx", __cplusplus}};
    m["workers"] = options.workers;
    m["tasks"] = tasks;
    json arts = json::array();
    std::sort(ctx.artifacts.begin(), ctx.artifacts.end());
    for (const auto& name : ctx.artifacts) {
        std::ifstream f(dir / name, std::ios::binary);
        std::stringstream buf;
        buf << f.rdbuf();
        const std::string bytes = buf.str();
        arts.push_back({{"file", name}, {"bytes", bytes.size()}, {"fnv1a", fnv1a_hex(bytes)}});
    }
    m["artifacts"] = arts;
    m["exit_code"] = result.exit_code;
    m["wall_time_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::ofstream(dir / "manifest.json", std::ios::binary) << m.dump(2) << "\n";
    result.manifest = std::move(m);
    return result;
}

}  // namespace eqd::cli
