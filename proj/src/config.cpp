#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "logdet/errors.hpp"
#include "logdet/experiments.hpp"

namespace logdet::experiments {

using nlohmann::json;

namespace {

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where)
{
    for (const auto& [key, value] : j.items()) {
        if (!known.contains(key))
            throw ConfigError(where + ": unknown key '" + key + "'");
    }
}

template <typename T>
T get_field(const json& j, const char* key, const std::string& where)
{
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(where + "." + key + ": " + e.what());
    }
}

template <typename T>
void read_optional(const json& j, const char* key, const std::string& where, T& out)
{
    if (j.contains(key))
        out = get_field<T>(j, key, where);
}

json complex_to_json(Complex z) { return json::array({z.real(), z.imag()}); }

Complex complex_from_json(const json& j, const std::string& where)
{
    if (j.is_number())
        return {j.get<double>(), 0.0};
    if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
        return {j[0].get<double>(), j[1].get<double>()};
    throw ConfigError(where + ": expected a number or [re, im]");
}

json matrix_to_json(const ensembles::MatrixSpec& m)
{
    json j{{"kind", ensembles::to_string(m.kind)}, {"n", m.n}};
    switch (m.kind) {
    case ensembles::MatrixKind::bidiagonal_toeplitz:
        j["a"] = complex_to_json(m.a);
        j["b"] = complex_to_json(m.b);
        break;
    case ensembles::MatrixKind::diagonal: {
        json runs = json::array();
        for (const auto& r : m.diagonal) {
            json run{{"value", r.value}};
            if (r.multiplicity > 0)
                run["multiplicity"] = r.multiplicity;
            runs.push_back(run);
        }
        j["diagonal"] = runs;
        break;
    }
    case ensembles::MatrixKind::file: j["path"] = m.path; break;
    default: break;
    }
    if (m.shift)
        j["shift"] = complex_to_json(*m.shift);
    return j;
}

ensembles::MatrixSpec matrix_from_json(const json& j)
{
    const std::string where = "matrix";
    if (!j.is_object())
        throw ConfigError("matrix: expected an object");
    reject_unknown(j, {"kind", "n", "a", "b", "diagonal", "path", "shift", "spec"}, where);
    const auto n = get_field<std::size_t>(j, "n", where);

    ensembles::MatrixSpec m;
    try {
        if (j.contains("spec")) {
            m = ensembles::parse_matrix_spec(get_field<std::string>(j, "spec", where), n);
        } else {
            const auto kind = get_field<std::string>(j, "kind", where);
            m.n = n;
            if (kind == "jordan") {
                m.kind = ensembles::MatrixKind::jordan;
            } else if (kind == "zero") {
                m.kind = ensembles::MatrixKind::zero;
            } else if (kind == "bidiagonal_toeplitz") {
                m.kind = ensembles::MatrixKind::bidiagonal_toeplitz;
                m.a = complex_from_json(j.at("a"), where + ".a");
                m.b = complex_from_json(j.at("b"), where + ".b");
            } else if (kind == "diagonal") {
                m.kind = ensembles::MatrixKind::diagonal;
                for (const auto& run : j.at("diagonal")) {
                    reject_unknown(run, {"value", "multiplicity"}, where + ".diagonal[]");
                    ensembles::DiagonalRun r;
                    r.value = get_field<double>(run, "value", where + ".diagonal[]");
                    read_optional(run, "multiplicity", where + ".diagonal[]", r.multiplicity);
                    m.diagonal.push_back(r);
                }
                ensembles::diagonal_entries(m);
            } else if (kind == "file") {
                m.kind = ensembles::MatrixKind::file;
                m.path = get_field<std::string>(j, "path", where);
            } else {
                throw ConfigError("matrix.kind: unknown kind '" + kind + "'");
            }
        }
    } catch (const FormatError& e) {
        throw ConfigError(std::string("matrix: ") + e.what());
    } catch (const json::exception& e) {
        throw ConfigError(std::string("matrix: ") + e.what());
    }
    if (j.contains("shift"))
        m.shift = complex_from_json(j.at("shift"), where + ".shift");
    return m;
}

json params_to_json(const ParamSettings& p)
{
    json j;
    j["alpha"] = p.alpha ? json(*p.alpha) : json("auto");
    j["nu_target"] = p.nu_target;
    j["gamma"] = p.gamma;
    j["eta"] = p.eta;
    j["delta"] = p.delta;
    j["tau"] = p.tau;
    j["kappa1"] = p.kappa1;
    j["kappa2"] = p.kappa2;
    j["beta"] = p.beta;
    j["L"] = p.L;
    j["C"] = p.C;
    j["headroom"] = p.headroom;
    j["convention"] = equiv::to_string(p.convention);
    j["estimate_eps"] = p.estimate_eps;
    j["eps_trials"] = p.eps_trials;
    j["neumann_terms"] = p.neumann_terms;
    j["tolerance_scale"] = p.tolerance_scale;
    return j;
}

ParamSettings params_from_json(const json& j)
{
    const std::string where = "params";
    if (!j.is_object())
        throw ConfigError("params: expected an object");
    reject_unknown(j,
                   {"alpha", "nu_target", "gamma", "eta", "delta", "tau", "kappa1", "kappa2", "beta", "L", "C",
                    "headroom", "convention", "estimate_eps", "eps_trials", "neumann_terms", "tolerance_scale"},
                   where);
    ParamSettings p;
    if (j.contains("alpha")) {
        const auto& a = j.at("alpha");
        if (a.is_string() && a.get<std::string>() == "auto")
            p.alpha.reset();
        else if (a.is_number())
            p.alpha = a.get<double>();
        else
            throw ConfigError("params.alpha: expected a number or \"auto\"");
    }
    read_optional(j, "nu_target", where, p.nu_target);
    read_optional(j, "gamma", where, p.gamma);
    read_optional(j, "eta", where, p.eta);
    read_optional(j, "delta", where, p.delta);
    read_optional(j, "tau", where, p.tau);
    read_optional(j, "kappa1", where, p.kappa1);
    read_optional(j, "kappa2", where, p.kappa2);
    read_optional(j, "beta", where, p.beta);
    read_optional(j, "L", where, p.L);
    read_optional(j, "C", where, p.C);
    read_optional(j, "headroom", where, p.headroom);
    if (j.contains("convention"))
        p.convention = equiv::parse_convention(get_field<std::string>(j, "convention", where));
    read_optional(j, "estimate_eps", where, p.estimate_eps);
    read_optional(j, "eps_trials", where, p.eps_trials);
    read_optional(j, "neumann_terms", where, p.neumann_terms);
    read_optional(j, "tolerance_scale", where, p.tolerance_scale);
    return p;
}

} // namespace

std::string to_string(Mode mode)
{
    switch (mode) {
    case Mode::single: return "single";
    case Mode::sweep: return "sweep";
    case Mode::field: return "field";
    }
    return "unknown";
}

Mode parse_mode(const std::string& text)
{
    if (text == "single")
        return Mode::single;
    if (text == "sweep")
        return Mode::sweep;
    if (text == "field")
        return Mode::field;
    throw ConfigError("unknown mode '" + text + "' (expected single, sweep or field)");
}

std::vector<Complex> ZGrid::points() const
{
    std::vector<Complex> out;
    const auto axis = [this](double lo, double hi, std::size_t k) {
        if (steps < 2)
            return lo;
        return lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(steps - 1);
    };
    for (std::size_t i = 0; i < steps; ++i)
        for (std::size_t r = 0; r < steps; ++r)
            out.emplace_back(axis(re_min, re_max, r), axis(im_min, im_max, i));
    return out;
}

void validate(const ExperimentConfig& config)
{
    if (config.trials < 1)
        throw ConfigError("trials must be at least 1");
    if (config.matrix.n < 1)
        throw ConfigError("matrix.n must be at least 1");
    const bool has_list = !config.n_list.empty();
    const bool has_grid = config.z_grid.has_value();
    switch (config.mode) {
    case Mode::single:
        if (has_list || has_grid)
            throw ConfigError("mode single takes neither N_list nor z_grid");
        break;
    case Mode::sweep:
        if (!has_list || has_grid)
            throw ConfigError("mode sweep requires N_list and no z_grid");
        if (!std::is_sorted(config.n_list.begin(), config.n_list.end()) || config.n_list.front() < 1)
            throw ConfigError("N_list must be ascending positive sizes");
        break;
    case Mode::field:
        if (!has_grid || has_list)
            throw ConfigError("mode field requires z_grid and no N_list");
        if (config.z_grid->steps < 1)
            throw ConfigError("z_grid.steps must be at least 1");
        break;
    }
}

json to_json(const ExperimentConfig& c)
{
    json j;
    j["matrix"] = matrix_to_json(c.matrix);
    j["model"] = noise::to_string(c.model.kind);
    j["params"] = params_to_json(c.params);
    j["trials"] = c.trials;
    j["seed"] = c.seed;
    j["mode"] = to_string(c.mode);
    if (!c.n_list.empty())
        j["N_list"] = c.n_list;
    if (c.z_grid) {
        const auto& g = *c.z_grid;
        j["z_grid"] = {{"re_min", g.re_min}, {"re_max", g.re_max}, {"im_min", g.im_min},
                       {"im_max", g.im_max}, {"steps", g.steps}};
    }
    j["output"] = c.output;
    return j;
}

ExperimentConfig config_from_json(const json& j)
{
    if (!j.is_object())
        throw ConfigError("config: expected a JSON object");
    reject_unknown(j, {"matrix", "model", "params", "trials", "seed", "mode", "N_list", "z_grid", "output"},
                   "config");
    ExperimentConfig c;
    if (!j.contains("matrix"))
        throw ConfigError("config: missing key 'matrix'");
    c.matrix = matrix_from_json(j.at("matrix"));
    if (j.contains("model"))
        c.model.kind = noise::parse_noise_kind(get_field<std::string>(j, "model", "config"));
    if (j.contains("params"))
        c.params = params_from_json(j.at("params"));
    read_optional(j, "trials", "config", c.trials);
    read_optional(j, "seed", "config", c.seed);
    if (j.contains("mode"))
        c.mode = parse_mode(get_field<std::string>(j, "mode", "config"));
    read_optional(j, "N_list", "config", c.n_list);
    if (j.contains("z_grid")) {
        const auto& g = j.at("z_grid");
        reject_unknown(g, {"re_min", "re_max", "im_min", "im_max", "steps"}, "z_grid");
        ZGrid grid;
        grid.re_min = get_field<double>(g, "re_min", "z_grid");
        grid.re_max = get_field<double>(g, "re_max", "z_grid");
        grid.im_min = get_field<double>(g, "im_min", "z_grid");
        grid.im_max = get_field<double>(g, "im_max", "z_grid");
        grid.steps = get_field<std::size_t>(g, "steps", "z_grid");
        c.z_grid = grid;
    }
    read_optional(j, "output", "config", c.output);
    validate(c);
    return c;
}

ExperimentConfig parse_config(const std::string& text)
{
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return config_from_json(j);
}

ExperimentConfig read_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    try {
        return parse_config(buf.str());
    } catch (const ConfigError& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

void write_config(const std::string& path, const ExperimentConfig& config)
{
    write_json(to_json(config), path);
}

} // namespace logdet::experiments
