// soblab: numerical laboratory for the stability of the critical p-Laplace
// equation around a single extremal bubble. Subcommands cover calibration,
// inequality fuzzing, spectra, projection, dual norms and stability sweeps.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "soblab/bubble.hpp"
#include "soblab/dualnorm.hpp"
#include "soblab/fem.hpp"
#include "soblab/field.hpp"
#include "soblab/grid.hpp"
#include "soblab/io.hpp"
#include "soblab/projection.hpp"
#include "soblab/rng.hpp"
#include "soblab/spectrum.hpp"
#include "soblab/stability.hpp"
#include "soblab/vectorial.hpp"

using nlohmann::json;
using namespace soblab;

namespace {

struct Common {
    int n = 3;
    double p = 2.0;
    int grid_size = 512;
    double lambda = 1.0;
    uint64_t seed = 0;
    std::string out;
    std::string format = "json";
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--n", c.n, "dimension (>= 2)");
    cmd->add_option("--p", c.p, "exponent in (1, n)");
    cmd->add_option("--grid-size", c.grid_size, "radial nodes")->check(CLI::Range(16, 8192));
    cmd->add_option("--lambda", c.lambda, "bubble scale");
    cmd->add_option("--seed", c.seed, "RNG seed");
    cmd->add_option("--out", c.out, "output path (default stdout)");
    cmd->add_option("--format", c.format, "csv|json")
        ->check(CLI::IsMember({"csv", "json"}));
}

void emit(const Common& c, const std::string& text) {
    if (c.out.empty())
        std::fwrite(text.data(), 1, text.size(), stdout);
    else
        write_file(c.out, text);
}

std::string to_text(const Common& c, const json& j) {
    if (c.format == "csv" && j.is_array() && !j.empty() && j.front().is_object()) {
        std::string s = "# soblab-csv-v1\n";
        bool first = true;
        for (auto& [key, val] : j.front().items()) {
            (void)val;
            if (!first) s += ',';
            s += key;
            first = false;
        }
        s += '\n';
        for (const auto& row : j) {
            first = true;
            for (auto& [key, val] : row.items()) {
                (void)key;
                if (!first) s += ',';
                if (val.is_number_float())
                    s += fmt17(val.get<double>());
                else
                    s += val.dump();
                first = false;
            }
            s += '\n';
        }
        return s;
    }
    return j.dump(2) + "\n";
}

struct Lab {
    Calibration cal;
    RadialGrid grid;
    Bubble bubble;

    static Lab make(const Common& c) {
        Lab lab;
        lab.grid = make_grid(c.n, c.grid_size, 1.0 / c.lambda);
        lab.cal = calibrate(c.n, c.p, &lab.grid);
        lab.bubble.amplitude = lab.cal.amplitude;
        lab.bubble.scale = c.lambda;
        return lab;
    }
    const Params& params() const { return cal.params; }
};

int run_calibrate(const Common& c) {
    Lab lab = Lab::make(c);
    auto el = el_residual(lab.params(), lab.bubble, lab.grid);
    BubbleProfile prof(lab.params(), lab.bubble);
    std::vector<double> gradp(lab.grid.N), vpow(lab.grid.N);
    for (int i = 0; i < lab.grid.N; ++i) {
        gradp[i] = std::pow(-prof.deriv(lab.grid.r[i]), c.p);
        vpow[i] = std::pow(prof.value(lab.grid.r[i]), lab.params().pstar);
    }
    double Ig = integrate(lab.grid, gradp);
    double Is = integrate(lab.grid, vpow);
    double Sn = std::pow(lab.params().S, c.n);
    json j{{"n", c.n},
           {"p", c.p},
           {"amplitude", lab.cal.amplitude},
           {"ratio_constant", lab.cal.ratio_constant},
           {"S", lab.params().S},
           {"grad_norm_pow", Ig},
           {"mass_norm_pow", Is},
           {"norm_consistency", std::abs(Ig - Is) / Sn},
           {"el_residual_interior_sup", el.interior_sup}};
    emit(c, to_text(c, j));
    bool ok = el.interior_sup <= 1e-8 && std::abs(Ig - Is) / Sn <= 1e-6;
    return ok ? 0 : 1;
}

int run_fuzz_vecineq(const Common& c, double kappa, uint64_t samples, double t_max) {
    auto consts = estimate_vec_constants(c.p, kappa, t_max);
    auto res = fuzz_gradient_ineq(c.p, consts, samples, c.seed);
    json j{{"p", c.p},
           {"kappa", kappa},
           {"samples", res.samples},
           {"min_margin", res.min_margin},
           {"argmin_x", res.argmin_x},
           {"argmin_y", res.argmin_y},
           {"min_margin_over_minterm", res.min_margin_over_minterm},
           {"omega3_min_rel", res.omega3_min_rel},
           {"constants",
            {{"c1", consts.c1}, {"c2", consts.c2}, {"c3", consts.c3}, {"kappa", consts.kappa}}}};
    emit(c, to_text(c, j));
    bool ok = res.min_margin >= -1e-12 && res.omega3_min_rel >= -1e-12;
    return ok ? 0 : 1;
}

int run_fuzz_scalar(const Common& c, double kappa, uint64_t samples) {
    Params pr = make_params(c.n, c.p);
    auto consts = estimate_scalar_constants(pr.pstar, kappa);
    auto res = fuzz_scalar_ineq(pr.pstar, consts, samples, c.seed);
    json j{{"n", c.n},
           {"p", c.p},
           {"pstar", pr.pstar},
           {"kappa", kappa},
           {"samples", res.samples},
           {"min_margin", res.min_margin},
           {"argmin_a", res.argmin_a},
           {"argmin_b", res.argmin_b},
           {"constants", {{"C1", consts.C1}, {"C2", consts.C2}}}};
    emit(c, to_text(c, j));
    bool ok = res.min_margin >= -1e-12 && consts.C1 >= 1.0 / pr.pstar;
    return ok ? 0 : 1;
}

int run_spectrum(const Common& c, int lmax, int k) {
    Lab lab = Lab::make(c);
    const Params& pr = lab.params();
    json modes = json::array();
    GapInfo gap = spectral_gap(pr, lab.bubble, lab.grid, lmax);
    bool ok = gap.lambda_hat > 0.0;
    for (int ell = 0; ell <= lmax; ++ell) {
        auto op = assemble_mode_operator(pr, lab.bubble, lab.grid, ell);
        auto res = solve_eigs(op, k);
        int next = (ell == 0) ? 2 : (ell == 1 ? 1 : 0);
        double gl = 0.0;
        if (next < static_cast<int>(res.eigenvalues.size()))
            gl = 0.5 * std::pow(pr.S, pr.p) * (res.eigenvalues[next] - (pr.pstar - 1.0));
        json m{{"ell", ell}, {"eigenvalues", res.eigenvalues}, {"gap_lambda", gl}};
        if (ell == 0) {
            m["identity_mu1_err"] = std::abs(res.eigenvalues[0] - (pr.p - 1.0)) / (pr.p - 1.0);
            m["identity_mu2_err"] =
                std::abs(res.eigenvalues[1] - (pr.pstar - 1.0)) / (pr.pstar - 1.0);
            ok = ok && m["identity_mu1_err"].get<double>() <= 1e-3 &&
                 m["identity_mu2_err"].get<double>() <= 1e-3;
        } else if (ell == 1) {
            m["identity_mu1_err"] =
                std::abs(res.eigenvalues[0] - (pr.pstar - 1.0)) / (pr.pstar - 1.0);
            ok = ok && m["identity_mu1_err"].get<double>() <= 1e-3;
        }
        modes.push_back(std::move(m));
    }
    json j{{"n", c.n},
           {"p", c.p},
           {"S", pr.S},
           {"modes", modes},
           {"mu_gap", gap.mu_gap},
           {"lambda_hat", gap.lambda_hat}};
    emit(c, to_text(c, j));
    return ok ? 0 : 1;
}

std::vector<double> sample_gap_direction(const Params& pr, const Bubble& b,
                                         const RadialGrid& g, Rng& rng,
                                         const std::vector<std::vector<double>>& eigdirs) {
    std::vector<double> phi(g.N, 0.0);
    if (rng.uniform() < 0.5 && !eigdirs.empty()) {
        for (const auto& e : eigdirs) {
            double coef = rng.normal();
            for (int i = 0; i < g.N; ++i) phi[i] += coef * e[i];
        }
    } else {
        double r0 = rng.uniform(0.0, 3.0 / b.scale);
        double sg = rng.log_uniform(0.2 / b.scale, 2.0 / b.scale);
        for (int i = 0; i < g.N; ++i) {
            double z = (g.r[i] - r0) / sg;
            phi[i] = std::exp(-0.5 * z * z);
        }
    }
    return phi;
}

int run_gap_check(const Common& c, int count, std::vector<double> norms, double delta_bar) {
    Lab lab = Lab::make(c);
    const Params& pr = lab.params();
    double boundary = 2.0 * pr.n / (pr.n + 2.0);
    int branch = (pr.p <= boundary) ? 1 : (pr.p < 2.0 ? 2 : 3);
    ChainConstants cc = make_chain_constants(pr, lab.bubble, lab.grid);
    GapInfo gap;
    gap.lambda_hat = cc.lambda_hat;
    gap.mu_gap = cc.mu_gap;

    auto op = assemble_mode_operator(pr, lab.bubble, lab.grid, 0);
    auto eres = solve_eigs(op, 7);
    std::vector<std::vector<double>> eigdirs(eres.eigenvectors.begin() + 2,
                                             eres.eigenvectors.end());
    Rng rng(c.seed + 1);
    double min_margin = std::numeric_limits<double>::infinity();
    json rows = json::array();
    for (int i = 0; i < count; ++i) {
        auto raw = sample_gap_direction(pr, lab.bubble, lab.grid, rng, eigdirs);
        DirectionSpec spec; // reuse the projection/normalization path
        // normalize via make_direction-style projection
        RadialField tmp;
        (void)spec;
        // project off tangents and normalize by hand
        auto dir = raw;
        {
            // reuse stability helper through a round-trip: orthogonalize + normalize
            BubbleProfile prof(pr, lab.bubble);
            std::vector<double> weight(lab.grid.gx.size());
            for (size_t t = 0; t < weight.size(); ++t)
                weight[t] = std::pow(prof.value(lab.grid.gx[t]), pr.pstar - 2.0);
            auto vg = fem::bubble_values(lab.grid, prof);
            std::vector<double> dl(lab.grid.gx.size());
            for (size_t t = 0; t < dl.size(); ++t) dl[t] = prof.dlam(lab.grid.gx[t]);
            for (int pass = 0; pass < 2; ++pass) {
                auto fg = fem::interp(lab.grid, dir);
                for (const auto* xi : {&vg, &dl}) {
                    double num = fem::weighted_ip(lab.grid, weight, *xi, fg);
                    double den = fem::weighted_ip(lab.grid, weight, *xi, *xi);
                    for (int t = 0; t < lab.grid.N; ++t) {
                        double xival = (xi == &vg) ? prof.value(lab.grid.r[t])
                                                   : prof.dlam(lab.grid.r[t]);
                        dir[t] -= num / den * xival;
                    }
                    fg = fem::interp(lab.grid, dir);
                }
            }
            for (int t = op.dirichlet_begin; t < lab.grid.N; ++t) dir[t] = 0.0;
        }
        auto d = fem::deriv(lab.grid, dir);
        double gn = fem::grad_norm(lab.grid, d, pr.p);
        if (!(gn > 0.0)) continue;
        for (double target : norms) {
            auto phi = dir;
            for (auto& x : phi) x *= target / gn;
            auto rep = perturbed_gap_check(pr, lab.bubble, lab.grid, ModeFn::radial(phi),
                                           cc.gamma0, cc.scalar.C1, branch, &gap, delta_bar);
            min_margin = std::min(min_margin, rep.margin);
            rows.push_back({{"sample", i},
                            {"norm", target},
                            {"margin", rep.margin},
                            {"lhs", rep.lhs},
                            {"rhs", rep.rhs}});
        }
    }
    json j{{"n", c.n},         {"p", c.p},
           {"branch", branch}, {"gamma0", cc.gamma0},
           {"C1", cc.scalar.C1}, {"lambda_hat", cc.lambda_hat},
           {"min_margin", min_margin}, {"checks", rows}};
    emit(c, to_text(c, j));
    return (min_margin >= -1e-10) ? 0 : 1;
}

int run_project(const Common& c, double epsilon, const std::string& direction) {
    Lab lab = Lab::make(c);
    const Params& pr = lab.params();
    auto dir = make_direction(pr, lab.bubble, lab.grid, DirectionSpec::parse(direction));
    RadialField u;
    u.add_bubble(lab.bubble, 1.0);
    if (epsilon != 0.0) u.add_nodal(dir, epsilon);
    auto res = project(pr, u, lab.bubble, lab.grid);
    double ortho_max = 0.0;
    for (double r : res.ortho_residuals) ortho_max = std::max(ortho_max, std::abs(r));
    json j{{"n", c.n},
           {"p", c.p},
           {"epsilon_in", epsilon},
           {"direction", direction},
           {"amplitude", res.v.amplitude},
           {"scale", res.v.scale},
           {"epsilon", res.epsilon},
           {"amplitude_drift", res.amplitude_drift},
           {"ortho_residuals", res.ortho_residuals},
           {"newton_iters", res.newton_iters}};
    emit(c, to_text(c, j));
    return (ortho_max <= 1e-8) ? 0 : 1;
}

int run_dualnorm(const Common& c, double epsilon, const std::string& direction) {
    Lab lab = Lab::make(c);
    const Params& pr = lab.params();
    RadialField u;
    u.add_bubble(lab.bubble, 1.0);
    if (epsilon != 0.0) {
        auto dir = make_direction(pr, lab.bubble, lab.grid, DirectionSpec::parse(direction));
        u.add_nodal(dir, epsilon);
    }
    Residual f = residual(pr, u, lab.grid);
    ChainConstants cc = make_chain_constants(pr, lab.bubble, lab.grid);
    DualOpts opts;
    opts.rmax = cc.window_radius;
    auto ds = dual_solve(pr, f, lab.grid, opts);
    double ident = std::abs(ds.pairing - std::pow(ds.grad_norm_p, pr.p));
    double scale = std::max(std::pow(ds.grad_norm_p, pr.p), 1e-300);

    // dictionary lower bound: v, dlam v, eigenvectors 3..6
    BubbleProfile prof(pr, lab.bubble);
    std::vector<std::vector<double>> dict;
    std::vector<double> vn(lab.grid.N), dn(lab.grid.N);
    for (int i = 0; i < lab.grid.N; ++i) {
        vn[i] = prof.value(lab.grid.r[i]);
        dn[i] = prof.dlam(lab.grid.r[i]);
    }
    dict.push_back(vn);
    dict.push_back(dn);
    auto op = assemble_mode_operator(pr, lab.bubble, lab.grid, 0);
    auto eres = solve_eigs(op, 6);
    for (int k = 2; k < 6; ++k) dict.push_back(eres.eigenvectors[k]);
    double lb = dictionary_lower_bound(pr, f, lab.grid, dict);

    json j{{"n", c.n},
           {"p", c.p},
           {"epsilon", epsilon},
           {"dual_norm", ds.dual_norm},
           {"grad_norm_w", ds.grad_norm_p},
           {"pairing", ds.pairing},
           {"duality_identity_residual", ident / scale},
           {"dictionary_lower_bound", lb},
           {"mu_extrapolation_err", ds.mu_extrapolation_err},
           {"newton_iters", ds.newton_iters}};
    emit(c, to_text(c, j));
    bool ok = ident / scale <= 1e-8 && lb <= ds.dual_norm * (1.0 + 1e-10) + 1e-300;
    return ok ? 0 : 1;
}

int run_sweep(const Common& c, const std::vector<std::string>& directions,
              std::vector<double> epsilons) {
    Lab lab = Lab::make(c);
    const Params& pr = lab.params();
    ChainConstants cc = make_chain_constants(pr, lab.bubble, lab.grid);
    std::vector<StabilityReport> all;
    bool ok = true;
    for (const auto& dname : directions) {
        auto dir = make_direction(pr, lab.bubble, lab.grid, DirectionSpec::parse(dname));
        auto rows = stability_sweep(pr, lab.bubble, lab.grid, dir, epsilons, &cc);
        for (auto& row : rows) {
            if (!row.error.empty()) { ok = false; continue; }
            if (!row.flagged_exact && !(row.ratio > 0.0 && std::isfinite(row.ratio))) ok = false;
        }
        all.insert(all.end(), rows.begin(), rows.end());
    }
    if (c.format == "csv") {
        emit(c, sweep_csv(all));
    } else {
        json rows = json::array();
        for (const auto& r : all)
            rows.push_back({{"n", r.n},
                            {"p", r.p},
                            {"epsilon", r.epsilon},
                            {"eps_out", r.eps_out},
                            {"lhs", r.lhs},
                            {"rhs", r.rhs},
                            {"ratio", r.ratio},
                            {"slope", r.slope},
                            {"amplitude_drift", r.amplitude_drift},
                            {"flagged", r.flagged_exact},
                            {"error", r.error}});
        emit(c, to_text(c, rows));
    }
    return ok ? 0 : 1;
}

int run_breakdown(const Common& c, double epsilon, const std::string& direction) {
    Lab lab = Lab::make(c);
    const Params& pr = lab.params();
    ChainConstants cc = make_chain_constants(pr, lab.bubble, lab.grid);
    auto dir = make_direction(pr, lab.bubble, lab.grid, DirectionSpec::parse(direction));
    RadialField u;
    u.add_bubble(lab.bubble, 1.0);
    u.add_nodal(dir, epsilon);
    auto pres = project(pr, u, lab.bubble, lab.grid);
    Residual f = residual(pr, u, lab.grid);
    DualOpts opts;
    opts.rmax = cc.window_radius;
    auto ds = dual_solve(pr, f, lab.grid, opts);
    TermTable t = term_breakdown(pr, u, pres.v, pres.epsilon, lab.grid, cc, ds.dual_norm);
    json j{{"n", c.n},
           {"p", c.p},
           {"epsilon", pres.epsilon},
           {"branch", cc.branch},
           {"kappa", cc.kappa},
           {"gamma0", cc.gamma0},
           {"lambda_hat", cc.lambda_hat},
           {"pairing", t.pairing},
           {"identity_grad", t.identity_grad},
           {"identity_mass", t.identity_mass},
           {"identity_scale", t.identity_scale},
           {"grad_term", t.grad_term},
           {"sq_term", t.sq_term},
           {"min_integral", t.min_integral},
           {"mass_term", t.mass_term},
           {"pstar_term", t.pstar_term},
           {"c_emp", t.c_emp},
           {"link_grad_ineq", t.link_grad_ineq},
           {"link_mass_ineq", t.link_mass_ineq},
           {"link_gap", t.link_gap},
           {"link_duality", t.link_duality}};
    emit(c, to_text(c, j));
    double idtol = 1e-8 * std::max(t.identity_scale, 1e-300);
    bool ok = std::abs(t.identity_grad) <= idtol && std::abs(t.identity_mass) <= idtol &&
              t.link_grad_ineq >= -1e-10 && t.link_mass_ineq >= -1e-10 &&
              t.link_gap >= -1e-10 && t.link_duality >= -1e-10 && t.c_emp > 0.0;
    return ok ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"soblab: p-Laplace bubble stability laboratory"};
    app.require_subcommand(1);
    app.set_config("--config", "", "key = value config file; flags override");
    app.allow_config_extras(CLI::config_extras_mode::ignore_all);

    Common c;
    double kappa = 0.1, t_max = 1e3, epsilon = 1e-3, delta_bar = 1e-2;
    uint64_t samples = 1000000;
    int lmax = 2, kcount = 4, count = 50;
    std::vector<double> norms{1e-4, 1e-3, 1e-2};
    std::vector<double> epsilons{1e-3, 3e-3, 1e-2, 3e-2, 1e-1};
    std::vector<std::string> directions{"eig:2"};
    std::string direction = "eig:2";

    auto* cal = app.add_subcommand("calibrate", "bubble calibration and Sobolev constant");
    add_common(cal, c);

    auto* fvec = app.add_subcommand("fuzz-vecineq", "fuzz the gradient inequalities");
    add_common(fvec, c);
    fvec->add_option("--kappa", kappa, "slack parameter");
    fvec->add_option("--samples", samples, "sample count");
    fvec->add_option("--t-max", t_max, "largest |y|/|x| in the constant scan");

    auto* fsc = app.add_subcommand("fuzz-scalar", "fuzz the zero-order inequalities");
    add_common(fsc, c);
    fsc->add_option("--kappa", kappa, "slack parameter");
    fsc->add_option("--samples", samples, "sample count");

    auto* spec = app.add_subcommand("spectrum", "per-mode eigenvalues and the gap");
    add_common(spec, c);
    spec->add_option("--lmax", lmax, "largest mode degree");
    spec->add_option("--k", kcount, "eigenvalues per mode");

    auto* gap = app.add_subcommand("gap-check", "perturbed spectral-gap margins");
    add_common(gap, c);
    gap->add_option("--count", count, "sampled directions");
    gap->add_option("--norms", norms, "||D phi||_p targets");
    gap->add_option("--delta-bar", delta_bar, "norm threshold");

    auto* proj = app.add_subcommand("project", "orthogonal projection onto the manifold");
    add_common(proj, c);
    proj->add_option("--epsilon", epsilon, "perturbation size");
    proj->add_option("--direction", direction, "eig:<k> or bump:<r0>:<sigma>");

    auto* dn = app.add_subcommand("dualnorm", "W^{-1,q} norm of P(u)");
    add_common(dn, c);
    dn->add_option("--epsilon", epsilon, "perturbation size (0: P(v) itself)");
    dn->add_option("--direction", direction, "eig:<k> or bump:<r0>:<sigma>");

    auto* sw = app.add_subcommand("sweep", "stability sweep over epsilon");
    add_common(sw, c);
    sw->add_option("--directions", directions, "perturbation directions");
    sw->add_option("--epsilons", epsilons, "epsilon values");

    auto* br = app.add_subcommand("breakdown", "term-by-term chain for one experiment");
    add_common(br, c);
    br->add_option("--epsilon", epsilon, "perturbation size");
    br->add_option("--direction", direction, "eig:<k> or bump:<r0>:<sigma>");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e); // --help
        std::cerr << e.what() << "\n\n" << app.help() << std::endl;
        return 2;
    }

    try {
        if (cal->parsed()) return run_calibrate(c);
        if (fvec->parsed()) return run_fuzz_vecineq(c, kappa, samples, t_max);
        if (fsc->parsed()) return run_fuzz_scalar(c, kappa, samples);
        if (spec->parsed()) return run_spectrum(c, lmax, kcount);
        if (gap->parsed()) return run_gap_check(c, count, norms, delta_bar);
        if (proj->parsed()) return run_project(c, epsilon, direction);
        if (dn->parsed()) return run_dualnorm(c, epsilon, direction);
        if (sw->parsed()) return run_sweep(c, directions, epsilons);
        if (br->parsed()) return run_breakdown(c, epsilon, direction);
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << std::endl;
        return 1;
    }
    return 2;
}
