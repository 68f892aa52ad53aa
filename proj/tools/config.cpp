#include "config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "eqd/dynamics.hpp"
#include "eqd/observables.hpp"

namespace eqd::cli {

namespace {

struct Entry {
    std::string value;
    std::size_t line = 0;
    std::size_t key_col = 0;
    std::size_t value_col = 0;
};

struct Section {
    std::size_t line = 0;
    std::vector<std::pair<std::string, Entry>> entries;

    const Entry* find(const std::string& key) const {
        for (const auto& [k, e] : entries)
            if (k == key) return &e;
        return nullptr;
    }
};

const std::map<std::string, std::set<std::string>> kKeys{
    {"map", {"spec"}},
    {"run", {"seed", "tasks", "output"}},
    {"sampler", {"method", "burn_in", "N", "start", "depth"}},
    {"norms", {"grid_n", "pairs"}},
    {"correlate", {"psi", "phi", "n_max", "grid_n"}},
    {"clt", {"phi", "n_block", "trajectories", "gk_n_max", "center", "reference_sigma2"}},
    {"transfer", {"phi", "N", "nodes"}},
};

bool is_identifier(const std::string& s) {
    return !s.empty() && (std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_') &&
           std::all_of(s.begin(), s.end(), [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; });
}

std::size_t skip_space(const std::string& s, std::size_t i) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    return i;
}

std::string rtrim(std::string s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
    return s;
}

class Parsed {
public:
    std::map<std::string, Section> sections;

    const Section* section(const std::string& name) const {
        auto it = sections.find(name);
        return it == sections.end() ? nullptr : &it->second;
    }

    const Entry& required(const std::string& sec, const std::string& key) const {
        const Section* s = section(sec);
        if (!s) throw ConfigError("missing section [" + sec + "] (needs '" + key + "')", 0, 0);
        const Entry* e = s->find(key);
        if (!e) throw ConfigError("section [" + sec + "] needs '" + key + "'", s->line, 1);
        return *e;
    }

    const Entry* optional(const std::string& sec, const std::string& key) const {
        const Section* s = section(sec);
        return s ? s->find(key) : nullptr;
    }
};

Parsed tokenize(const std::string& text) {
    Parsed p;
    std::istringstream in(text);
    std::string raw;
    std::size_t lineno = 0;
    std::string current;
    while (std::getline(in, raw)) {
        ++lineno;
        if (!raw.empty() && raw.back() == '\r') raw.pop_back();
        const std::size_t b = skip_space(raw, 0);
        if (b == raw.size() || raw[b] == '#' || raw[b] == ';') continue;
        if (raw[b] == '[') {
            const std::size_t close = raw.find(']', b);
            if (close == std::string::npos) throw ConfigError("unterminated section header", lineno, raw.size() + 1);
            const std::size_t after = skip_space(raw, close + 1);
            if (after != raw.size() && raw[after] != '#' && raw[after] != ';')
                throw ConfigError("unexpected text after section header", lineno, after + 1);
            std::string name = raw.substr(b + 1, close - b - 1);
            if (name != "observables" && !kKeys.count(name))
                throw ConfigError("unknown section [" + name + "]", lineno, b + 2);
            if (p.sections.count(name)) throw ConfigError("duplicate section [" + name + "]", lineno, b + 1);
            p.sections[name].line = lineno;
            current = name;
            continue;
        }
        const std::size_t eq = raw.find('=', b);
        if (eq == std::string::npos) throw ConfigError("expected 'key = value'", lineno, b + 1);
        if (current.empty()) throw ConfigError("entry outside of any section", lineno, b + 1);
        const std::string key = rtrim(raw.substr(b, eq - b));
        if (!is_identifier(key)) throw ConfigError("invalid key '" + key + "'", lineno, b + 1);
        if (current != "observables" && !kKeys.at(current).count(key))
            throw ConfigError("unknown key '" + key + "' in [" + current + "]", lineno, b + 1);
        Section& sec = p.sections[current];
        if (sec.find(key)) throw ConfigError("duplicate key '" + key + "'", lineno, b + 1);
        const std::size_t v = skip_space(raw, eq + 1);
        Entry e{rtrim(raw.substr(std::min(v, raw.size()))), lineno, b + 1, v + 1};
        if (e.value.empty()) throw ConfigError("empty value for '" + key + "'", lineno, v + 1);
        sec.entries.emplace_back(key, e);
    }
    return p;
}

template <class T>
T integer(const Entry& e, T lo, T hi) {
    T v{};
    const char* first = e.value.data();
    const char* last = first + e.value.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last) throw ConfigError("expected an integer, got '" + e.value + "'", e.line, e.value_col);
    if (v < lo || v > hi)
        throw ConfigError("value " + e.value + " out of range [" + std::to_string(lo) + ", " + std::to_string(hi) + "]",
                          e.line, e.value_col);
    return v;
}

double real(const Entry& e) {
    char* end = nullptr;
    const double v = std::strtod(e.value.c_str(), &end);
    if (end == e.value.c_str() || *end != '\0' || !std::isfinite(v))
        throw ConfigError("expected a number, got '" + e.value + "'", e.line, e.value_col);
    return v;
}

bool boolean(const Entry& e) {
    if (e.value == "true" || e.value == "yes" || e.value == "1") return true;
    if (e.value == "false" || e.value == "no" || e.value == "0") return false;
    throw ConfigError("expected true or false, got '" + e.value + "'", e.line, e.value_col);
}

cplx complex_at(const std::string& s, std::size_t& i, const Entry& e) {
    auto fail = [&] { return ConfigError("malformed complex number", e.line, e.value_col + i); };
    i = skip_space(s, i);
    const char* begin = s.c_str() + i;
    char* end = nullptr;
    const double a = std::strtod(begin, &end);
    if (end == begin) throw fail();
    i += static_cast<std::size_t>(end - begin);
    if (i < s.size() && s[i] == 'j') {
        ++i;
        return {0.0, a};
    }
    if (i < s.size() && (s[i] == '+' || s[i] == '-')) {
        begin = s.c_str() + i;
        const double b = std::strtod(begin, &end);
        if (end == begin) throw fail();
        i += static_cast<std::size_t>(end - begin);
        if (i >= s.size() || s[i] != 'j') throw fail();
        ++i;
        return {a, b};
    }
    return {a, 0.0};
}

std::vector<cplx> point(const Entry& e) {
    const std::string& s = e.value;
    std::size_t i = skip_space(s, 0);
    if (i >= s.size() || s[i] != '[') throw ConfigError("expected '[' starting a point", e.line, e.value_col + i);
    ++i;
    std::vector<cplx> out{complex_at(s, i, e)};
    for (i = skip_space(s, i); i < s.size() && s[i] == ','; i = skip_space(s, i)) {
        ++i;
        out.push_back(complex_at(s, i, e));
    }
    if (i >= s.size() || s[i] != ']') throw ConfigError("expected ']'", e.line, e.value_col + i);
    if (skip_space(s, i + 1) != s.size()) throw ConfigError("trailing text after point", e.line, e.value_col + i + 1);
    if (out.size() != 2 && out.size() != 3) throw ConfigError("a point needs 2 or 3 coordinates", e.line, e.value_col);
    return out;
}

std::string name_ref(const Entry& e, const ExperimentConfig& c) {
    for (const auto& [name, spec] : c.observables)
        if (name == e.value) return e.value;
    throw ConfigError("unknown observable '" + e.value + "'", e.line, e.value_col);
}

}  // namespace

bool ExperimentConfig::has_task(const std::string& t) const {
    return std::find(tasks.begin(), tasks.end(), t) != tasks.end();
}

const std::string& ExperimentConfig::observable(const std::string& name) const {
    for (const auto& [n, spec] : observables)
        if (n == name) return spec;
    throw Error("unknown observable '" + name + "'");
}

ExperimentConfig parse_config(const std::string& text) {
    const Parsed p = tokenize(text);
    ExperimentConfig c;
    c.text = text;

    const Entry& map = p.required("map", "spec");
    try {
        c.map_spec = DynMap::parse(map.value).spec();
    } catch (const ParseError& e) {
        throw ConfigError(std::string("map spec: ") + e.what(), map.line, map.value_col + e.position());
    }

    if (const Section* obs = p.section("observables")) {
        for (const auto& [name, e] : obs->entries) {
            try {
                Observable::parse(e.value);
            } catch (const ParseError& err) {
                throw ConfigError(std::string("observable '") + name + "': " + err.what(), e.line,
                                  e.value_col + err.position());
            }
            c.observables.emplace_back(name, e.value);
        }
    }

    c.seed = integer<std::uint64_t>(p.required("run", "seed"), 0, UINT64_MAX);
    const Entry& tasks = p.required("run", "tasks");
    {
        std::size_t i = 0;
        const std::string& s = tasks.value;
        while (i <= s.size()) {
            const std::size_t comma = std::min(s.find(',', i), s.size());
            const std::size_t b = skip_space(s, i);
            const std::string t = rtrim(s.substr(b, comma - std::min(b, comma)));
            if (std::find(kTaskOrder.begin(), kTaskOrder.end(), t) == kTaskOrder.end())
                throw ConfigError("unknown task '" + t + "'", tasks.line, tasks.value_col + b);
            if (!c.has_task(t)) c.tasks.push_back(t);
            i = comma + 1;
        }
    }
    if (const Entry* out = p.optional("run", "output")) c.output = out->value;

    const bool needs_sample = c.has_task("sample") || c.has_task("correlate") || c.has_task("clt");
    if (needs_sample) {
        const Entry& m = p.required("sampler", "method");
        if (m.value != "backward" && m.value != "tree" && m.value != "fubini_study")
            throw ConfigError("sampler method must be backward, tree or fubini_study", m.line, m.value_col);
        c.sampler.method = m.value;
        if (m.value == "tree") {
            c.sampler.depth = integer<int>(p.required("sampler", "depth"), 0, 64);
        } else {
            c.sampler.N = integer<std::size_t>(p.required("sampler", "N"), 1, 100000000);
        }
        if (m.value != "fubini_study") {
            const Entry& st = p.required("sampler", "start");
            c.sampler.start = point(st);
        }
        if (const Entry* b = p.optional("sampler", "burn_in")) c.sampler.burn_in = integer<int>(*b, 0, 100000);
        if (m.value == "fubini_study" && (c.has_task("correlate") || c.has_task("clt")))
            throw ConfigError("correlate and clt need samples of the equilibrium measure, not fubini_study", m.line,
                              m.value_col);
    }
    if (c.has_task("norms")) {
        c.norms.grid_n = integer<std::size_t>(p.required("norms", "grid_n"), 8, 100000000);
        if (const Entry* e = p.optional("norms", "pairs")) c.norms.pairs = integer<std::size_t>(*e, 1, 100000000);
    }
    if (c.has_task("correlate")) {
        c.correlate.psi = name_ref(p.required("correlate", "psi"), c);
        c.correlate.phi = name_ref(p.required("correlate", "phi"), c);
        c.correlate.n_max = integer<int>(p.required("correlate", "n_max"), 0, 1000);
        if (const Entry* e = p.optional("correlate", "grid_n")) c.correlate.grid_n = integer<std::size_t>(*e, 8, 100000000);
    }
    if (c.has_task("clt")) {
        c.clt.phi = name_ref(p.required("clt", "phi"), c);
        c.clt.n_block = integer<int>(p.required("clt", "n_block"), 1, 100000000);
        c.clt.trajectories = integer<int>(p.required("clt", "trajectories"), 2, 100000000);
        if (const Entry* e = p.optional("clt", "gk_n_max")) c.clt.gk_n_max = integer<int>(*e, 0, 1000);
        if (const Entry* e = p.optional("clt", "center")) c.clt.center = boolean(*e);
        if (const Entry* e = p.optional("clt", "reference_sigma2")) {
            const double v = real(*e);
            if (!(v > 0.0)) throw ConfigError("reference_sigma2 must be positive", e->line, e->value_col);
            c.clt.reference_sigma2 = v;
        }
    }
    if (c.has_task("transfer")) {
        c.transfer.phi = name_ref(p.required("transfer", "phi"), c);
        c.transfer.N = integer<int>(p.required("transfer", "N"), 0, 64);
        c.transfer.nodes = integer<std::size_t>(p.required("transfer", "nodes"), 2, 100000000);
    }
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot read config file " + path, 0, 0);
    std::stringstream buf;
    buf << f.rdbuf();
    return parse_config(buf.str());
}

}  // namespace eqd::cli
