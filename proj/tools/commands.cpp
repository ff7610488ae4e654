#include "commands.hpp"

#include "output.hpp"

#include "qnet/fdm_oracle.hpp"
#include "qnet/parallel.hpp"
#include "qnet/pipeline.hpp"

#include <fmt/core.h>

#include <cmath>
#include <sstream>

namespace qnet::cli {

namespace {

using Json = nlohmann::ordered_json;

Json to_json(const Vec& v) {
    Json a = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

Json to_json(const Mat& m) {
    Json rows = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(to_json(Vec(m.row(i).transpose())));
    return rows;
}

Json to_json(const CMat& m) {
    return Json{{"re", to_json(Mat(m.real()))}, {"im", to_json(Mat(m.imag()))}};
}

Json to_json(cplx z) { return Json{{"re", z.real()}, {"im", z.imag()}}; }

Json to_json(const std::vector<cplx>& zs) {
    Json a = Json::array();
    for (const cplx z : zs) a.push_back(to_json(z));
    return a;
}

Json warnings_json(const Warnings& w) {
    Json a = Json::array();
    for (const auto& s : w) a.push_back(s);
    return a;
}

PipelineOptions pipeline_options(const RunConfig& cfg, int threads) {
    PipelineOptions o;
    o.s_max = cfg.s_max;
    o.lambda_cut = cfg.lambda_cut;
    o.exact_background = cfg.exact_background;
    o.n_scan = cfg.n_scan;
    o.threads = threads;
    return o;
}

Pipeline make_pipeline(const RunConfig& cfg, int threads, Warnings& warnings) {
    if (!cfg.synthetic) return Pipeline(cfg.net, pipeline_options(cfg, threads), &warnings);
    const SyntheticData& syn = *cfg.synthetic;
    ChannelBasis basis;
    auto add = [&](double t, bool open, std::size_t i) {
        ChannelMode m;
        m.wire = fmt::format("{}{}", open ? "open" : "closed", i);
        m.wire_index = basis.size();
        m.threshold = t;
        m.open = open;
        (open ? basis.open_modes : basis.closed_modes).push_back(m);
    };
    for (std::size_t i = 0; i < syn.open_thresholds.size(); ++i) add(syn.open_thresholds[i], true, i);
    for (std::size_t i = 0; i < syn.closed_thresholds.size(); ++i) add(syn.closed_thresholds[i], false, i);
    SpectralData data;
    for (std::size_t r = 0; r < syn.eigenvalues.size(); ++r) {
        EigenPair p;
        p.index = static_cast<int>(r);
        p.eigenvalue = syn.eigenvalues[r];
        p.well = "synthetic";
        data.pairs.push_back(p);
    }
    data.trace_matrix = syn.traces;
    data.prefactor = Vec::Ones(static_cast<Eigen::Index>(syn.eigenvalues.size()));
    return Pipeline(cfg.net, basis, data, pipeline_options(cfg, threads));
}

// Sweep energies: the configured range, by default the band without its edge guards.
// Every JSON artifact records the seed it was produced with.
void write_json(const RunContext& ctx, const std::string& name, Json j) {
    j["seed"] = ctx.seed;
    write_file(ctx.out_dir / name, dump_json(j));
}

std::vector<double> sweep_points(const RunConfig& cfg, const Band& band) {
    const double lo = std::isnan(cfg.lambda_min) ? band.guarded_lo() : cfg.lambda_min;
    const double hi = std::isnan(cfg.lambda_max) ? band.guarded_hi() : cfg.lambda_max;
    if (!std::isfinite(hi))
        throw Error(ErrorKind::Configuration, cfg.path + ": [run] lambda_max: the band is unbounded above; set it explicitly");
    if (lo < band.guarded_lo())
        throw Error(ErrorKind::Configuration,
                    fmt::format("{}: [run] lambda_min: {} lies below the guarded band edge {}", cfg.path, lo, band.guarded_lo()));
    if (hi > band.guarded_hi())
        throw Error(ErrorKind::Configuration,
                    fmt::format("{}: [run] lambda_max: {} lies above the guarded band edge {}", cfg.path, hi, band.guarded_hi()));
    if (!(lo < hi)) throw Error(ErrorKind::Configuration, cfg.path + ": [run]: empty sweep range");
    std::vector<double> out;
    for (int i = 0; i < cfg.points; ++i) out.push_back(lo + (hi - lo) * i / (cfg.points - 1));
    return out;
}

std::pair<double, double> essential_window(const RunConfig& cfg, const Band& band) {
    const double c = std::isnan(cfg.essential_center) ? 0.5 * (band.lo + band.hi) : cfg.essential_center;
    const double t = std::isnan(cfg.essential_half_width) ? 0.4 * band.width() : cfg.essential_half_width;
    if (!(t > 0)) throw Error(ErrorKind::Configuration, cfg.path + ": [run] essential_half_width: must be positive");
    return {c, t};
}

std::string channel_label(const ChannelMode& m) { return fmt::format("{}:{}", m.wire, m.s); }

std::vector<std::string> cmd_spectrum(const RunConfig& cfg, const RunContext& ctx, Warnings& warnings) {
    const Pipeline p = make_pipeline(cfg, ctx.threads, warnings);
    const SpectralData& d = p.data();
    Json channels = Json::array();
    for (std::size_t c = 0; c < p.basis().size(); ++c) {
        const ChannelMode& m = p.basis().mode(c);
        channels.push_back(Json{{"wire", m.wire}, {"s", m.s}, {"threshold", m.threshold}, {"open", m.open}});
    }
    Json levels = Json::array();
    for (std::size_t r = 0; r < d.rows(); ++r) {
        const EigenPair& e = d.pairs[r];
        levels.push_back(Json{{"index", e.index},
                              {"well", e.well},
                              {"eigenvalue", e.eigenvalue},
                              {"p", e.p},
                              {"q", e.q},
                              {"traces", to_json(Vec(d.trace_matrix.row(static_cast<Eigen::Index>(r)).transpose()))}});
    }
    const Json j{{"fermi_level", cfg.net.fermi_level},
                 {"band", Json{{"lo", p.band().lo}, {"hi", p.band().hi}}},
                 {"lambda_cut", d.lambda_cut},
                 {"channels", channels},
                 {"levels", levels},
                 {"warnings", warnings_json(warnings)}};
    write_json(ctx, "spectrum.json", j);
    std::ostringstream table;
    write_spectral_table(table, d);
    write_file(ctx.out_dir / "spectrum.txt", table.str());
    return {"spectrum.json", "spectrum.txt"};
}

std::vector<std::string> cmd_dn(const RunConfig& cfg, const RunContext& ctx, Warnings& warnings) {
    const Pipeline p = make_pipeline(cfg, ctx.threads, warnings);
    const auto lams = sweep_points(cfg, p.band());
    const auto n = static_cast<Eigen::Index>(p.basis().n_open());
    std::vector<std::string> header = {"lambda"};
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i; j < n; ++j) header.push_back(fmt::format("dn_{}_{}", i + 1, j + 1));
    header.push_back("condition");
    std::vector<std::vector<double>> rows(lams.size());
    std::vector<std::string> errors(lams.size());
    parallel_for(lams.size(), ctx.threads, [&](std::size_t k) {
        std::vector<double> row = {lams[k]};
        try {
            const IntermediateDn idn = p.intermediate(lams[k]);
            for (Eigen::Index i = 0; i < n; ++i)
                for (Eigen::Index j = i; j < n; ++j) row.push_back(idn.matrix(i, j));
            row.push_back(idn.condition);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::PoleProximity && e.kind() != ErrorKind::DispersionRoot) throw;
            row.assign(1, lams[k]);
            row.resize(header.size(), std::nan(""));
            errors[k] = e.what();
        }
        rows[k] = row;
    });
    CsvTable table(header);
    for (std::size_t k = 0; k < rows.size(); ++k) {
        table.add(rows[k]);
        if (!errors[k].empty()) warn(&warnings, fmt::format("dn at {}: {}", num(lams[k]), errors[k]));
    }
    write_file(ctx.out_dir / "dn.csv", table.str());
    return {"dn.csv"};
}

std::vector<std::string> cmd_eigen(const RunConfig& cfg, const RunContext& ctx, Warnings& warnings) {
    const Pipeline p = make_pipeline(cfg, ctx.threads, warnings);
    const IntermediateSpectrum sp = p.spectrum();
    Json roots = Json::array(), decoupled = Json::array();
    for (const auto& r : sp.roots)
        roots.push_back(Json{{"lambda", r.lambda}, {"residual", r.residual}, {"nu", to_json(r.nu)}});
    for (const auto& d : sp.decoupled) decoupled.push_back(Json{{"lambda", d.lambda}, {"multiplicity", d.multiplicity}});
    const Json j{{"band", Json{{"lo", p.band().lo}, {"hi", p.band().hi}}},
                 {"roots", roots},
                 {"decoupled", decoupled},
                 {"warnings", warnings_json(warnings)}};
    write_json(ctx, "eigen.json", j);
    return {"eigen.json"};
}

std::vector<std::string> cmd_scatter(const RunConfig& cfg, const RunContext& ctx, Warnings& warnings) {
    const Pipeline p = make_pipeline(cfg, ctx.threads, warnings);
    const auto lams = sweep_points(cfg, p.band());
    const auto n = static_cast<Eigen::Index>(p.basis().n_open());
    std::vector<std::string> header = {"lambda"};
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) {
            header.push_back(fmt::format("re_S_{}_{}", i + 1, j + 1));
            header.push_back(fmt::format("im_S_{}_{}", i + 1, j + 1));
        }
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) header.push_back(fmt::format("T_{}_{}", i + 1, j + 1));
    header.push_back("unitarity_defect");

    std::vector<std::vector<double>> rows(lams.size());
    std::vector<std::string> errors(lams.size());
    parallel_for(lams.size(), ctx.threads, [&](std::size_t k) {
        std::vector<double> row = {lams[k]};
        try {
            const ScatteringMatrix s = p.scatter(lams[k]);
            for (Eigen::Index i = 0; i < n; ++i)
                for (Eigen::Index j = 0; j < n; ++j) {
                    row.push_back(s.s_flux(i, j).real());
                    row.push_back(s.s_flux(i, j).imag());
                }
            for (Eigen::Index i = 0; i < n; ++i)
                for (Eigen::Index j = 0; j < n; ++j) row.push_back(std::norm(s.s_flux(i, j)));
            row.push_back(s.unitarity_defect);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::PoleProximity) throw;
            row.assign(1, lams[k]);
            row.resize(header.size(), std::nan(""));
            errors[k] = e.what();
        }
        rows[k] = row;
    });
    CsvTable table(header);
    for (std::size_t k = 0; k < rows.size(); ++k) {
        table.add(rows[k]);
        if (!errors[k].empty()) warn(&warnings, fmt::format("scatter at {}: {}", num(lams[k]), errors[k]));
    }
    write_file(ctx.out_dir / "scatter.csv", table.str());
    std::vector<std::string> files = {"scatter.csv"};
    if (cfg.svg) {
        // Probabilities out of the first channel.
        std::vector<Series> series;
        for (Eigen::Index i = 0; i < n; ++i) {
            Series s{fmt::format("T {} from {}", channel_label(p.basis().mode(static_cast<std::size_t>(i))),
                                 channel_label(p.basis().mode(0))),
                     {}};
            const std::size_t col = 1 + 2 * static_cast<std::size_t>(n * n) + static_cast<std::size_t>(i * n);
            for (const auto& row : rows) s.y.push_back(row[col]);
            series.push_back(std::move(s));
        }
        write_file(ctx.out_dir / "scatter.svg", svg_plot(lams, series, "lambda", "probability"));
        files.push_back("scatter.svg");
    }
    return files;
}

std::vector<std::string> cmd_resonances(const RunConfig& cfg, const RunContext& ctx, Warnings& warnings) {
    const Pipeline p = make_pipeline(cfg, ctx.threads, warnings);
    const Band band = p.band();
    const auto poles = p.residues(band.lo, band.hi);
    std::vector<Json> items(poles.size());
    std::vector<std::string> notes(poles.size());
    parallel_for(poles.size(), ctx.threads, [&](std::size_t i) {
        const PoleResidue& r = poles[i];
        Json item{{"pole", r.lambda}, {"decoupled", r.decoupled}, {"phi", to_json(r.phi)},
                  {"rank_one_defect", r.rank_one_defect}};
        if (r.phi.norm() == 0.0) {
            items[i] = item;
            return;
        }
        const ResonanceZero z = resonance_zero(r.lambda, r.phi, [&](cplx l) { return k_plus_flux(p.basis(), l); });
        item["re"] = z.lambda.real();
        item["im"] = z.lambda.imag();
        item["residual"] = z.residual;
        item["iterations"] = z.iterations;
        item["newton_fallback"] = z.newton_fallback;
        // Regime diagnostics of the one-pole approximation around this pole.
        const Vec k0 = p.k_plus(r.lambda);
        const double gamma = r.phi.cwiseAbs2().cwiseQuotient(k0).sum();
        const double w = std::min(2.0 * gamma, 0.05 * p.spacing());
        double thin = std::nan("");
        if (p.basis().n_closed() > 0) {
            const ResonanceSplit split =
                resonance_split(p.data(), p.basis(), r.lambda, nearest_eigenvalue(p.data(), r.lambda));
            thin = thin_network_norm(split.kmm, p.k_minus(r.lambda));
        }
        double d = std::nan("");
        if (w > 0) {
            d = 0.0;
            for (int s = 0; s < 40; ++s) {
                const double lam = r.lambda - w + 2.0 * w * (s + 0.5) / 40.0;
                const Vec k = p.k_plus(lam);
                const Vec isq = k.cwiseSqrt().cwiseInverse();
                const Mat scaled = isq.asDiagonal() * p.remainder(lam, r) * isq.asDiagonal();
                d = std::max(d, Eigen::JacobiSVD<Mat>(scaled).singularValues()[0]);
            }
        }
        item["width"] = gamma;
        item["thin_norm"] = thin;
        item["d"] = d;
        item["deviation_bound"] = d < 1.0 ? deviation_bound(d, k0) : std::nan("");
        if (!(thin < 1.0) || !(d < 0.3))
            notes[i] = fmt::format("one-pole regime not met at pole {}: thin norm {}, d {}", num(r.lambda), num(thin), num(d));
        items[i] = item;
    });
    Json list = Json::array();
    for (std::size_t i = 0; i < items.size(); ++i) {
        list.push_back(items[i]);
        if (!notes[i].empty()) warn(&warnings, notes[i]);
    }
    write_json(ctx, "resonances.json", Json{{"resonances", list}, {"warnings", warnings_json(warnings)}});
    return {"resonances.json"};
}

std::vector<std::string> cmd_fit_model(const RunConfig& cfg, const RunContext& ctx, Warnings& warnings) {
    const Pipeline p = make_pipeline(cfg, ctx.threads, warnings);
    const auto [center, half] = essential_window(cfg, p.band());
    const auto poles = p.essential_poles(center, half);
    InnerModel model = fit_model(poles, cfg.energy_origin, &warnings);
    Json pole_list = Json::array();
    for (const auto& e : poles) pole_list.push_back(Json{{"lambda", e.lambda}, {"phi", to_json(e.phi)}});
    const Json mj{{"energy_origin", model.energy_origin},
                  {"essential_center", center},
                  {"essential_half_width", half},
                  {"poles", pole_list},
                  {"k2", to_json(model.k2)},
                  {"eigvecs", to_json(model.eigvecs)},
                  {"frame", to_json(model.frame)},
                  {"beta00", to_json(model.beta00)},
                  {"beta01", to_json(model.beta01)},
                  {"deficiency_overlap", model.deficiency_overlap},
                  {"warnings", warnings_json(warnings)}};
    write_json(ctx, "model.json", mj);

    RunConfig window = cfg;
    window.lambda_min = std::max(center - half, p.band().guarded_lo());
    window.lambda_max = std::min(center + half, p.band().guarded_hi());
    const auto lams = sweep_points(window, p.band());
    std::vector<std::vector<double>> rows(lams.size());
    parallel_for(lams.size(), ctx.threads, [&](std::size_t k) {
        const double lam = lams[k];
        const Vec kp = p.k_plus(lam);
        double dev_ess = std::nan(""), dev_full = std::nan("");
        try {
            const CMat sm = model_s_matrix(model, kp, lam).s;
            dev_ess = (sm - s_essential(poles, kp, lam).s).cwiseAbs().maxCoeff();
            dev_full = (sm - p.scatter(lam).s).cwiseAbs().maxCoeff();
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::PoleProximity) throw;
        }
        rows[k] = {lam, dev_ess, dev_full};
    });
    CsvTable table({"lambda", "deviation_essential", "deviation_full"});
    for (const auto& r : rows) table.add(r);
    write_file(ctx.out_dir / "fit.csv", table.str());
    return {"model.json", "fit.csv"};
}

std::vector<std::string> cmd_oracle(const RunConfig& cfg, const RunContext& ctx, Warnings& warnings) {
    if (cfg.synthetic) throw Error(ErrorKind::Configuration, cfg.path + ": [synthetic]: the grid oracle needs a geometry");
    const Pipeline p = make_pipeline(cfg, ctx.threads, warnings);
    double h = cfg.grid_h;
    if (std::isnan(h)) {
        double width = kInf;
        for (const auto& w : cfg.net.wires) width = std::min(width, w.width);
        h = width / 16.0;
    }
    const auto rows = oracle_compare(p, sweep_points(cfg, p.band()), h, ctx.threads);
    CsvTable table({"lambda", "deviation", "T_dn", "T_fdm", "fdm_unitarity_defect"});
    for (const auto& r : rows) table.add({r.lambda, r.deviation, r.t_dn, r.t_fdm, r.fdm_defect});
    write_file(ctx.out_dir / "oracle.csv", table.str());
    return {"oracle.csv"};
}

std::vector<std::string> cmd_jump_start(const RunConfig& cfg, const RunContext& ctx, Warnings& warnings) {
    if (!cfg.jump_start) throw Error(ErrorKind::Configuration, cfg.path + ": [jump_start]: missing section");
    const JumpStartConfig& jc = *cfg.jump_start;
    ScalarModel m;
    m.beta = jc.beta;
    m.k2 = Eigen::Map<const Vec>(jc.levels.data(), static_cast<Eigen::Index>(jc.levels.size()));
    m.q = Eigen::Map<const Vec>(jc.weights.data(), static_cast<Eigen::Index>(jc.weights.size()));
    const cplx k0 = resonance_continuation(m, static_cast<std::size_t>(jc.level));
    const JumpStart js = fit_jump_start(k0);
    const Factorization f = factorize_and_complement(m, {k0, -std::conj(k0)});
    const Json j{{"beta", m.beta},
                 {"level", jc.level},
                 {"k0", to_json(k0)},
                 {"kappa2", js.kappa2},
                 {"beta00", js.beta00},
                 {"beta01_sq", js.beta01_sq},
                 {"beta11", js.beta11},
                 {"match_error", js.match_error},
                 {"zeros", to_json(f.zeros)},
                 {"factor", to_json(f.factor)},
                 {"complement", to_json(f.complement)},
                 {"warnings", warnings_json(warnings)}};
    write_json(ctx, "jump_start.json", j);

    const double top = std::sqrt(m.k2.maxCoeff());
    const double lo = std::isnan(jc.p_min) ? 0.0 : jc.p_min, hi = std::isnan(jc.p_max) ? 2.0 * top : jc.p_max;
    if (!(lo < hi)) throw Error(ErrorKind::Configuration, cfg.path + ": [jump_start] p_max: empty range");
    CsvTable table({"p", "re_S", "im_S", "re_factor", "im_factor", "re_complement", "im_complement", "jump_start_error"});
    for (int i = 0; i < jc.points; ++i) {
        const double p = lo + (hi - lo) * i / (jc.points - 1);
        const cplx s = scalar_model_s(m, p), fs = f.factor_s(p), cs = f.complement_s(p);
        table.add({p, s.real(), s.imag(), fs.real(), fs.imag(), cs.real(), cs.imag(),
                   std::abs(jump_start_s(js, p) + jump_start_factor(k0, p))});
    }
    write_file(ctx.out_dir / "jump_start.csv", table.str());
    return {"jump_start.json", "jump_start.csv"};
}

} // namespace

const std::vector<std::string>& command_names() {
    static const std::vector<std::string> names = {"spectrum",   "dn",        "eigen",  "scatter",
                                                    "resonances", "fit-model", "oracle", "jump-start"};
    return names;
}

std::vector<std::string> run_command(const std::string& command, const RunConfig& cfg, const RunContext& ctx,
                                     Warnings& warnings) {
    if (command == "spectrum") return cmd_spectrum(cfg, ctx, warnings);
    if (command == "dn") return cmd_dn(cfg, ctx, warnings);
    if (command == "eigen") return cmd_eigen(cfg, ctx, warnings);
    if (command == "scatter") return cmd_scatter(cfg, ctx, warnings);
    if (command == "resonances") return cmd_resonances(cfg, ctx, warnings);
    if (command == "fit-model") return cmd_fit_model(cfg, ctx, warnings);
    if (command == "oracle") return cmd_oracle(cfg, ctx, warnings);
    if (command == "jump-start") return cmd_jump_start(cfg, ctx, warnings);
    throw Error(ErrorKind::Configuration, "unknown command '" + command + "'");
}

} // namespace qnet::cli
