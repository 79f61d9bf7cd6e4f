#include "torusbif/config.hpp"

#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "torusbif/expr.hpp"
#include "torusbif/paperlab.hpp"

namespace torusbif::config {

using nlohmann::json;

namespace {

const json* find(const json& j, const std::string& key) {
    auto it = j.find(key);
    return it == j.end() ? nullptr : &*it;
}

double require_positive(const json& j, const std::string& path) {
    if (!j.is_number()) throw ConfigError(path, "must be a number");
    const double v = j.get<double>();
    if (!(v > 0.0)) throw ConfigError(path, "must be > 0");
    return v;
}

}  // namespace

std::vector<Vec2> AnalysisConfig::probe_grid() const {
    std::vector<Vec2> grid;
    for (int i = 0; i < probe_nx; ++i)
        for (int j = 0; j < probe_ny; ++j) {
            const double fx = probe_nx > 1 ? (double)i / (probe_nx - 1) : 0.5;
            const double fy = probe_ny > 1 ? (double)j / (probe_ny - 1) : 0.5;
            grid.push_back({probe_x_lo + fx * (probe_x_hi - probe_x_lo),
                            probe_y_lo + fy * (probe_y_hi - probe_y_lo)});
        }
    return grid;
}

AnalysisConfig parse_config(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const std::exception& e) {
        throw ConfigError("/", std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("/", "top level must be an object");

    AnalysisConfig cfg;

    const json* field = find(j, "field");
    if (!field || !field->is_object()) throw ConfigError("/field", "required object");
    if (const json* name = find(*field, "name")) {
        if (!name->is_string()) throw ConfigError("/field/name", "must be a string");
        cfg.field.name = name->get<std::string>();
        if (const json* params = find(*field, "params")) {
            if (!params->is_object()) throw ConfigError("/field/params", "must be an object");
            for (auto it = params->begin(); it != params->end(); ++it) {
                if (!it.value().is_number())
                    throw ConfigError("/field/params/" + it.key(), "must be a number");
                cfg.field.params[it.key()] = it.value().get<double>();
            }
        }
    } else if (const json* terms = find(*field, "terms")) {
        if (!terms->is_array() || terms->empty())
            throw ConfigError("/field/terms", "must be a non-empty array");
        if (const json* period = find(*field, "period"))
            cfg.field.period = require_positive(*period, "/field/period");
        int idx = 0;
        for (const auto& t : *terms) {
            const std::string p = "/field/terms/" + std::to_string(idx++);
            if (!t.is_object() || !find(t, "x") || !find(t, "y"))
                throw ConfigError(p, "must be an object with x and y expressions");
            if (!(*find(t, "x")).is_string() || !(*find(t, "y")).is_string())
                throw ConfigError(p, "x and y must be strings");
            const std::string ex = (*find(t, "x")).get<std::string>();
            const std::string ey = (*find(t, "y")).get<std::string>();
            try {
                expr::parse(ex);
                expr::parse(ey);
            } catch (const expr::ParseError& e) {
                throw ConfigError(p, e.what());
            }
            cfg.field.term_exprs.push_back({ex, ey});
        }
    } else {
        throw ConfigError("/field", "needs either a registry name or expression terms");
    }

    if (const json* tol = find(j, "tolerances")) {
        if (!tol->is_object()) throw ConfigError("/tolerances", "must be an object");
        if (const json* v = find(*tol, "ode_tol"))
            cfg.ode_tol = require_positive(*v, "/tolerances/ode_tol");
        if (const json* v = find(*tol, "newton_tol"))
            cfg.newton_tol = require_positive(*v, "/tolerances/newton_tol");
        if (const json* v = find(*tol, "vanish_tol"))
            cfg.vanish_tol = require_positive(*v, "/tolerances/vanish_tol");
        if (const json* v = find(*tol, "resonance_margin"))
            cfg.resonance_margin = require_positive(*v, "/tolerances/resonance_margin");
        if (const json* v = find(*tol, "curve_residual"))
            cfg.curve_residual = require_positive(*v, "/tolerances/curve_residual");
    }

    const json* grids = find(j, "grids");
    if (!grids || !grids->is_object()) throw ConfigError("/grids", "required object");
    if (const json* mr = find(*grids, "mu_range")) {
        if (!mr->is_array() || mr->size() != 2 || !(*mr)[0].is_number() ||
            !(*mr)[1].is_number())
            throw ConfigError("/grids/mu_range", "must be [lo, hi]");
        cfg.mu_lo = (*mr)[0].get<double>();
        cfg.mu_hi = (*mr)[1].get<double>();
        if (!(cfg.mu_lo < cfg.mu_hi))
            throw ConfigError("/grids/mu_range", "must satisfy lo < hi");
    }
    if (const json* mc = find(*grids, "mu_count")) {
        if (!mc->is_number_integer() || mc->get<int>() < 0)
            throw ConfigError("/grids/mu_count", "must be a non-negative integer");
        cfg.mu_count = mc->get<int>();
    }
    const json* el = find(*grids, "eps_list");
    if (!el || !el->is_array() || el->empty())
        throw ConfigError("/grids/eps_list", "required non-empty array");
    if (el->size() < 2)
        throw ConfigError("/grids/eps_list",
                          "needs at least 2 entries (the coefficient fit needs k-l+2 points)");
    double prev = 0.0;
    int ei = 0;
    for (const auto& v : *el) {
        const std::string p = "/grids/eps_list/" + std::to_string(ei++);
        if (!v.is_number()) throw ConfigError(p, "must be a number");
        const double e = v.get<double>();
        if (!(e > 0.0)) throw ConfigError(p, "must be > 0");
        if (!(e > prev)) throw ConfigError(p, "must be strictly ascending");
        prev = e;
        cfg.eps_list.push_back(e);
    }
    if (const json* pg = find(*grids, "probe_grid")) {
        if (!pg->is_object()) throw ConfigError("/grids/probe_grid", "must be an object");
        auto axis = [&](const char* key, double* lo, double* hi, int* n) {
            if (const json* a = find(*pg, key)) {
                const std::string p = std::string("/grids/probe_grid/") + key;
                if (!a->is_array() || a->size() != 3)
                    throw ConfigError(p, "must be [lo, hi, count]");
                *lo = (*a)[0].get<double>();
                *hi = (*a)[1].get<double>();
                *n = (*a)[2].get<int>();
                if (*n < 1) throw ConfigError(p, "count must be >= 1");
            }
        };
        axis("x", &cfg.probe_x_lo, &cfg.probe_x_hi, &cfg.probe_nx);
        axis("y", &cfg.probe_y_lo, &cfg.probe_y_hi, &cfg.probe_ny);
    }

    if (const json* out = find(j, "outputs")) {
        if (!out->is_string()) throw ConfigError("/outputs", "must be a string");
        cfg.outputs = out->get<std::string>();
    }
    if (const json* sd = find(j, "seed")) {
        if (!sd->is_array() || sd->size() != 2)
            throw ConfigError("/seed", "must be [x, y]");
        cfg.seed = Vec2{(*sd)[0].get<double>(), (*sd)[1].get<double>()};
    }
    if (const json* cm = find(j, "certify_mu")) {
        if (!cm->is_number()) throw ConfigError("/certify_mu", "must be a number");
        cfg.certify_mu = cm->get<double>();
    }
    if (const json* nr = find(j, "n_returns")) {
        if (!nr->is_number_integer() || nr->get<int>() < 10)
            throw ConfigError("/n_returns", "must be an integer >= 10");
        cfg.n_returns = nr->get<int>();
    }
    if (const json* h = find(j, "harmonics")) {
        if (!h->is_number_integer() || h->get<int>() < 1)
            throw ConfigError("/harmonics", "must be a positive integer");
        cfg.harmonics = h->get<int>();
    }
    return cfg;
}

AnalysisConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("/", "cannot open config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

BuiltField build_field(const FieldConfig& fc) {
    BuiltField bf;
    if (!fc.name.empty()) {
        if (fc.name == "candido-novaes-3d") {
            paperlab::PaperParams p;
            if (auto it = fc.params.find("a"); it != fc.params.end()) p.a = it->second;
            if (auto it = fc.params.find("b"); it != fc.params.end()) p.b = it->second;
            bf.planar = paperlab::reduce_cylindrical(p);
            bf.three_d = paperlab::field_3d(p);
            bf.formula_tensors = paperlab::tensor_series(p);
            char buf[96];
            std::snprintf(buf, sizeof buf, "candido-novaes-3d(a=%g, b=%g)", p.a, p.b);
            bf.description = buf;
            return bf;
        }
        throw ConfigError("/field/name", "unknown registry field '" + fc.name + "'");
    }

    ode::FieldSpec f;
    f.dimension = 2;
    f.period = fc.period;
    f.order = (int)fc.term_exprs.size();
    for (const auto& [ex, ey] : fc.term_exprs) {
        auto fx = std::make_shared<expr::Expression>(expr::parse(ex));
        auto fy = std::make_shared<expr::Expression>(expr::parse(ey));
        f.terms.push_back([fx, fy](double t, const double* x, double mu, double* out) {
            out[0] = fx->eval(t, x[0], x[1], mu);
            out[1] = fy->eval(t, x[0], x[1], mu);
        });
    }
    bf.planar = std::move(f);
    bf.description = "expression field";
    return bf;
}

void BuiltField::convert_start(const std::vector<double>& start, double* t0, Vec2* x0) const {
    if (start.size() == 2) {
        *t0 = 0.0;
        *x0 = {start[0], start[1]};
        return;
    }
    if (start.size() == 3 && is_three_d()) {
        paperlab::cylindrical_start(start.data(), t0, x0);
        return;
    }
    throw ConfigError("/start", "expected 2 components (planar) or 3 (built-in 3D field)");
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.15e", v);
    return buf;
}

}  // namespace torusbif::config
