#include <CLI11.hpp>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "torusbif/averaging.hpp"
#include "torusbif/config.hpp"
#include "torusbif/hopf.hpp"
#include "torusbif/nsmap.hpp"
#include "torusbif/torus.hpp"

namespace tb = torusbif;
using tb::config::fmt;

namespace {

void parallel_for(int n, int jobs, const std::function<void(int)>& fn) {
    jobs = std::max(1, std::min(jobs, n));
    if (jobs <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j)
        pool.emplace_back([&] {
            for (;;) {
                const int i = next.fetch_add(1);
                if (i >= n) break;
                fn(i);
            }
        });
    for (auto& t : pool) t.join();
}

std::string json_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '"' || c == '\\') {
            out += '\\';
            out += c;
        } else if (c == '\n') {
            out += "\\n";
        } else {
            out += c;
        }
    }
    return out;
}

/// Minimal deterministic JSON emitter; all doubles go through fmt().
struct Jw {
    std::string s;
    std::vector<bool> first{true};

    void sep() {
        if (!first.back()) s += ',';
        first.back() = false;
    }
    void key(const std::string& k) {
        sep();
        s += '"' + k + "\":";
    }
    void open_obj(const std::string& k = "") {
        if (!k.empty()) key(k);
        else sep();
        s += '{';
        first.push_back(true);
    }
    void close_obj() {
        s += '}';
        first.pop_back();
    }
    void open_arr(const std::string& k = "") {
        if (!k.empty()) key(k);
        else sep();
        s += '[';
        first.push_back(true);
    }
    void close_arr() {
        s += ']';
        first.pop_back();
    }
    void num(const std::string& k, double v) {
        key(k);
        s += fmt(v);
    }
    void raw_num(double v) {
        sep();
        s += fmt(v);
    }
    void integer(const std::string& k, long v) {
        key(k);
        s += std::to_string(v);
    }
    void str(const std::string& k, const std::string& v) {
        key(k);
        s += '"' + json_escape(v) + '"';
    }
    void boolean(const std::string& k, bool v) {
        key(k);
        s += v ? "true" : "false";
    }
};

struct Pipeline {
    tb::config::AnalysisConfig cfg;
    tb::config::BuiltField field;
    tb::averaging::AveragedTable table;
    tb::hopf::HopfPoint hp;
    tb::nsmap::PoincareMap map;
    int l = 0, k = 0;
};

/// Shared front of analyze/sweep: averaging order, Hopf point, return map.
Pipeline run_front(const std::string& config_path, std::string* stage) {
    Pipeline p;
    *stage = "config";
    p.cfg = tb::config::load_config(config_path);
    *stage = "field";
    p.field = tb::config::build_field(p.cfg.field);

    *stage = "averaging";
    tb::averaging::AveragingOptions aopts;
    aopts.vanish_tol = p.cfg.vanish_tol;
    const double mu_mid = 0.5 * (p.cfg.mu_lo + p.cfg.mu_hi);
    p.table = tb::averaging::make_table(p.field.planar, p.cfg.probe_grid(), mu_mid, aopts);
    p.l = p.table.l;
    p.k = p.field.planar.order;

    *stage = "hopf";
    const auto g_l = p.table.g_fn(p.l);
    const tb::Vec2 seed = p.cfg.seed ? *p.cfg.seed
                                     : tb::Vec2{0.5 * (p.cfg.probe_x_lo + p.cfg.probe_x_hi),
                                                0.5 * (p.cfg.probe_y_lo + p.cfg.probe_y_hi)};
    const auto branch = tb::hopf::trace_zero_branch(g_l, p.cfg.mu_lo, p.cfg.mu_hi, seed);
    p.hp = tb::hopf::find_hopf(branch, g_l);
    p.hp.ell_1l = tb::hopf::lyapunov_avg(g_l, p.hp);

    p.map = tb::nsmap::PoincareMap{&p.field.planar, 1024};
    return p;
}

tb::nsmap::NsOptions ns_options(const tb::config::AnalysisConfig& cfg) {
    tb::nsmap::NsOptions o;
    o.newton_tol = cfg.newton_tol;
    o.resonance_margin = cfg.resonance_margin;
    return o;
}

std::vector<double> fit_eps_list(const Pipeline& p) {
    const int need = p.k - p.l + 2;
    if ((int)p.cfg.eps_list.size() >= need) return p.cfg.eps_list;
    std::vector<double> eps(8);
    for (int i = 0; i < 8; ++i)
        eps[i] = 1e-4 * std::pow(5e-3 / 1e-4, i / 7.0);
    return eps;
}

int cmd_analyze(const std::string& config_path, int jobs, const std::string& out_override) {
    std::string stage = "config";
    try {
        Pipeline p = run_front(config_path, &stage);
        const tb::nsmap::NsOptions nso = ns_options(p.cfg);

        stage = "critical-curve";
        const auto curve = tb::nsmap::critical_curve(p.map, p.hp, p.cfg.eps_list, nso);

        stage = "series-fit";
        const auto fit =
            tb::nsmap::lyapunov_series_fit(p.map, p.hp, fit_eps_list(p), p.l, p.k, nso);

        stage = "series-formula";
        std::optional<tb::nsmap::CoefficientSeries> formula;
        if (p.field.formula_tensors)
            formula = tb::nsmap::lyapunov_series_formula(*p.field.formula_tensors);

        stage = "certify";
        tb::torus::TorusOptions topts;
        topts.n_returns = p.cfg.n_returns;
        topts.harmonics = p.cfg.harmonics;
        topts.residual_threshold = p.cfg.curve_residual;
        topts.ns = nso;
        const double cmu = p.cfg.certify_mu_or_default();
        const int ncert = (int)p.cfg.eps_list.size();
        std::vector<tb::torus::TorusCertificate> certs(ncert);
        std::vector<std::string> cert_err(ncert);
        std::atomic<bool> degenerate{false};
        parallel_for(ncert, jobs, [&](int i) {
            try {
                certs[i] =
                    tb::torus::certify(p.field.planar, p.hp, fit, cmu, p.cfg.eps_list[i], topts);
            } catch (const tb::torus::DegenerateError& e) {
                degenerate = true;
                cert_err[i] = e.what();
            } catch (const std::exception& e) {
                cert_err[i] = e.what();
            }
        });
        if (degenerate) {
            std::cerr << "analyze: degenerate classification: all coefficients below floor\n";
            return 2;
        }

        stage = "report";
        Jw w;
        w.open_obj();
        w.str("field", p.field.description);
        w.open_obj("hopf");
        w.num("mu0", p.hp.mu0);
        w.open_arr("x");
        w.raw_num(p.hp.x.x);
        w.raw_num(p.hp.x.y);
        w.close_arr();
        w.num("omega0", p.hp.omega0);
        w.num("alpha_prime", p.hp.alpha_prime);
        w.num("ell_1l_averaged", p.hp.ell_1l);
        w.close_obj();
        w.integer("l", p.l);
        w.integer("k", p.k);
        w.integer("j_star", fit.j_star());

        w.open_obj("ell_table");
        w.open_arr("fit");
        for (double v : fit.ell) w.raw_num(v);
        w.close_arr();
        w.open_arr("fit_sigma");
        for (double v : fit.coef_sigma) w.raw_num(v);
        w.close_arr();
        w.num("fit_residual", fit.fit_residual);
        if (formula) {
            w.open_arr("formula");
            for (double v : formula->ell) w.raw_num(v);
            w.close_arr();
        }
        w.close_obj();

        w.open_obj("critical_curve");
        w.open_arr("samples");
        for (const auto& s : curve.samples) {
            w.open_obj();
            w.num("eps", s.eps);
            w.num("mu", s.mu);
            w.num("mod_lambda", std::abs(s.lambda));
            w.num("theta", std::arg(s.lambda));
            w.boolean("resonance_ok", s.resonance_ok);
            w.close_obj();
        }
        w.close_arr();
        w.num("slope", curve.slope);
        w.num("intercept", curve.intercept);
        w.num("r_squared", curve.r_squared);
        w.close_obj();

        w.open_arr("certificates");
        for (int i = 0; i < ncert; ++i) {
            w.open_obj();
            w.num("eps", p.cfg.eps_list[i]);
            w.num("mu", cmu);
            if (!cert_err[i].empty()) {
                w.str("error", cert_err[i]);
            } else {
                const auto& c = certs[i];
                w.num("mu_crit", c.mu_crit);
                w.boolean("exists", c.exists);
                w.num("side", c.side);
                w.integer("j_star", c.j_star);
                w.str("torus_stability", !c.exists              ? "none"
                                         : *c.measured_torus_stable ? "stable"
                                                                    : "unstable");
                w.str("cycle_stability", c.measured_cycle_stable ? "stable" : "unstable");
                w.num("cycle_modulus", c.cycle_modulus);
                w.num("invariance_residual", c.invariance_residual);
                if (!c.diagnostics.empty()) w.str("diagnostics", c.diagnostics);
            }
            w.close_obj();
        }
        w.close_arr();
        w.close_obj();

        const std::string outdir = out_override.empty() ? p.cfg.outputs : out_override;
        std::filesystem::create_directories(outdir);
        const std::string path = outdir + "/report.json";
        std::ofstream out(path);
        out << w.s << "\n";
        out.close();
        std::cout << path << "\n";
        return 0;
    } catch (const tb::config::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "analyze: stage '" << stage << "' failed: " << e.what() << "\n";
        return 3;
    }
}

int cmd_section(const std::string& config_path, double mu, double eps,
                const std::string& start_str, int n, const std::string& out_override) {
    std::string stage = "config";
    try {
        const auto cfg = tb::config::load_config(config_path);
        stage = "field";
        const auto field = tb::config::build_field(cfg.field);

        std::vector<double> start;
        std::stringstream ss(start_str);
        std::string tok;
        while (std::getline(ss, tok, ',')) start.push_back(std::stod(tok));
        double t0 = 0.0;
        tb::Vec2 x0;
        field.convert_start(start, &t0, &x0);

        stage = "section";
        const auto cloud =
            tb::torus::sample_section(field.planar, mu, eps, x0, n, 0, t0, false, 512);

        const std::string outdir = out_override.empty() ? cfg.outputs : out_override;
        std::filesystem::create_directories(outdir);
        const std::string path = outdir + "/section.csv";
        std::ofstream out(path);
        out << (start.size() == 3 ? "n,x,z" : "n,x,y") << "\n";
        for (size_t i = 0; i < cloud.points.size(); ++i)
            out << i << "," << fmt(cloud.points[i].x) << "," << fmt(cloud.points[i].y) << "\n";
        out.close();
        std::cout << path << "\n";
        return 0;
    } catch (const tb::config::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "section: stage '" << stage << "' failed: " << e.what() << "\n";
        return 3;
    }
}

int cmd_sweep(const std::string& config_path, int jobs, const std::string& out_override) {
    std::string stage = "config";
    try {
        Pipeline p = run_front(config_path, &stage);
        const tb::nsmap::NsOptions nso = ns_options(p.cfg);

        stage = "series-fit";
        const auto fit =
            tb::nsmap::lyapunov_series_fit(p.map, p.hp, fit_eps_list(p), p.l, p.k, nso);
        const int js = fit.j_star();
        if (js < 0) {
            std::cerr << "sweep: degenerate classification\n";
            return 2;
        }
        const double ell_star = fit.ell_at(js);

        stage = "critical-curve";
        std::vector<double> mu_crit(p.cfg.eps_list.size());
        for (size_t i = 0; i < p.cfg.eps_list.size(); ++i)
            mu_crit[i] =
                tb::nsmap::critical_mu(p.map, p.hp, p.cfg.eps_list[i], p.hp.mu0, p.hp.x, nso).mu;

        stage = "sweep";
        const int nmu = p.cfg.mu_count;
        const int ncell = nmu * (int)p.cfg.eps_list.size();
        struct Cell {
            bool ok = false;
            double mod = 0, theta = 0, ell1 = 0;
            bool have_ell = false;
            bool resonance_ok = false;
            bool predicted = false;
        };
        std::vector<Cell> cells(ncell);
        parallel_for(ncell, jobs, [&](int idx) {
            const int ie = idx / std::max(1, nmu);
            const int im = idx % std::max(1, nmu);
            const double eps = p.cfg.eps_list[ie];
            const double mu =
                nmu > 1 ? p.cfg.mu_lo + (p.cfg.mu_hi - p.cfg.mu_lo) * im / (nmu - 1)
                        : 0.5 * (p.cfg.mu_lo + p.cfg.mu_hi);
            Cell& c = cells[idx];
            try {
                const auto na = tb::nsmap::normal_form(p.map, mu, eps, p.hp.x, nso);
                c.mod = na.modulus;
                c.theta = na.theta;
                c.resonance_ok = na.resonance_ok;
                if (c.resonance_ok) {
                    c.ell1 = na.ell1;
                    c.have_ell = true;
                }
                c.predicted = ell_star * (mu - mu_crit[ie]) < 0.0;
                c.ok = true;
            } catch (const std::exception&) {
                c.ok = false;
            }
        });

        const std::string outdir = out_override.empty() ? p.cfg.outputs : out_override;
        std::filesystem::create_directories(outdir);
        const std::string path = outdir + "/sweep.csv";
        std::ofstream out(path);
        out << "mu,eps,mod_lambda,theta,ell1,resonance_ok,torus_predicted\n";
        for (size_t ie = 0; ie < p.cfg.eps_list.size(); ++ie)
            for (int im = 0; im < nmu; ++im) {
                const double eps = p.cfg.eps_list[ie];
                const double mu =
                    nmu > 1 ? p.cfg.mu_lo + (p.cfg.mu_hi - p.cfg.mu_lo) * im / (nmu - 1)
                            : 0.5 * (p.cfg.mu_lo + p.cfg.mu_hi);
                const Cell& c = cells[ie * nmu + im];
                out << fmt(mu) << "," << fmt(eps) << ",";
                if (c.ok) {
                    out << fmt(c.mod) << "," << fmt(c.theta) << ","
                        << (c.have_ell ? fmt(c.ell1) : "") << ","
                        << (c.resonance_ok ? "true" : "false") << ","
                        << (c.predicted ? "true" : "false") << "\n";
                } else {
                    out << ",,,,\n";
                }
            }
        out.close();
        std::cout << path << "\n";
        return 0;
    } catch (const tb::config::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "sweep: stage '" << stage << "' failed: " << e.what() << "\n";
        return 3;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"torus-bifurcation analysis of periodically perturbed planar systems"};
    app.require_subcommand(1);

    std::string config_path, out_dir;
    int jobs = 1;

    auto* analyze = app.add_subcommand("analyze", "run the full pipeline, write report.json");
    analyze->add_option("--config", config_path, "JSON config file")->required();
    analyze->add_option("--jobs", jobs, "worker threads");
    analyze->add_option("--out", out_dir, "output directory override");

    auto* section = app.add_subcommand("section", "sample the Poincare section, write section.csv");
    double mu = 0.0, eps = 0.0;
    std::string start_str;
    int nreturns = 600;
    section->add_option("--config", config_path, "JSON config file")->required();
    section->add_option("--mu", mu, "parameter mu")->required();
    section->add_option("--eps", eps, "parameter eps")->required();
    section->add_option("--start", start_str, "start point \"x,y[,z]\"")->required();
    section->add_option("--n", nreturns, "number of returns")->required();
    section->add_option("--out", out_dir, "output directory override");

    auto* sweep = app.add_subcommand("sweep", "grid sweep, write sweep.csv");
    sweep->add_option("--config", config_path, "JSON config file")->required();
    sweep->add_option("--jobs", jobs, "worker threads");
    sweep->add_option("--out", out_dir, "output directory override");

    CLI11_PARSE(app, argc, argv);

    if (app.got_subcommand(analyze)) return cmd_analyze(config_path, jobs, out_dir);
    if (app.got_subcommand(section)) return cmd_section(config_path, mu, eps, start_str, nreturns, out_dir);
    if (app.got_subcommand(sweep)) return cmd_sweep(config_path, jobs, out_dir);
    return 1;
}
