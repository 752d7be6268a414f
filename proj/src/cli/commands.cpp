#include "geomphase/cli/commands.hpp"

#include <omp.h>

#include <chrono>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "geomphase/berry.hpp"
#include "geomphase/dynamics.hpp"
#include "geomphase/models.hpp"
#include "geomphase/rspt.hpp"

namespace geomphase::cli {

namespace {

using models::BoxModel;
using models::ModelKind;

rspt::PerturbationExpansion custom_expansion(const RunConfig& cfg) {
    SpectrumSnapshot base = SpectrumSnapshot::compute(OperatorMatrix::hermitian(cfg.custom_h0));
    return rspt::extend_order(
        rspt::make_expansion(base, OperatorMatrix::hermitian(cfg.custom_h)), cfg.order);
}

rspt::PerturbationExpansion box_expansion_at(const BoxModel& model, double L, int K,
                                             par::Mode mode = par::default_mode()) {
    Matrix h0 = Matrix::Zero(model.basis_size, model.basis_size);
    for (int n = 1; n <= model.basis_size; ++n)
        h0(n - 1, n - 1) = models::box_energy(n, L, model.config);
    ParameterPoint p{{"L", L}};
    SpectrumSnapshot base = SpectrumSnapshot::compute(OperatorMatrix{std::move(h0)}, p);
    return rspt::extend_order(rspt::make_expansion(base, models::coupling_matrix(model, L).h), K,
                              mode);
}

berry::ExpansionFactory expansion_factory(const BoxModel& model, int K) {
    BoxModel copy = model;
    return [copy, K](const ParameterPoint& p) {
        return box_expansion_at(copy, p.get("L"), K, par::Mode::serial);
    };
}

berry::ZerothFamily zeroth_family(const BoxModel& model) {
    models::BasisFamily family = models::basis_family(model);
    return [family](const ParameterPoint& p, int dir) {
        if (p.name(dir) != "L") return Matrix::Zero(family.size, family.size).eval();
        return berry::connection_zeroth(family, p, "L", 1e-5);
    };
}

dynamics::WallSchedule build_schedule(const RunConfig& cfg) {
    switch (cfg.schedule_type) {
        case ScheduleType::constant:
            return dynamics::WallSchedule::constant(cfg.l_start, cfg.tau);
        case ScheduleType::linear:
            return dynamics::WallSchedule::linear(cfg.l_start, cfg.l_end, cfg.tau);
        case ScheduleType::bump:
            return dynamics::WallSchedule::bump(cfg.l_start, cfg.amplitude, cfg.tau);
        case ScheduleType::smoothstep:
            return dynamics::WallSchedule::smoothstep(cfg.l_start, cfg.l_end, cfg.tau);
        case ScheduleType::none:
            break;
    }
    throw ConfigError("this command needs a [schedule] section");
}

// parameter path traced by a schedule under a model kind's R rule
ParameterPath schedule_path(const BoxModel& model, const dynamics::WallSchedule& sched,
                            int samples) {
    std::vector<PathSample> out;
    bool closed = std::abs(sched.L(0.0) - sched.L(sched.tau)) < 1e-12 &&
                  std::abs(sched.Ldot(0.0) - sched.Ldot(sched.tau)) < 1e-12;
    for (int k = 0; k <= samples; ++k) {
        double t = sched.tau * k / samples;
        double L = sched.L(t);
        double Ld = sched.Ldot(t);
        double R = 0.0;
        switch (model.kind) {
            case ModelKind::transformed:
                R = model.config.mass * L * Ld;
                break;
            case ModelKind::effective_plus:
            case ModelKind::effective_minus:
                R = Ld / L;
                break;
            case ModelKind::conventional_box:
            case ModelKind::effective_mass:
                R = 0.0;
                break;
        }
        ParameterPoint p = (model.kind == ModelKind::conventional_box ||
                            model.kind == ModelKind::effective_mass)
                               ? ParameterPoint{{"L", L}}
                               : ParameterPoint{{"L", L}, {"R", R}};
        out.push_back({t, p});
    }
    return ParameterPath(std::move(out), closed);
}

void emit_phase_rows(ResultTable& table, const std::string& model_name, int level_1based,
                     double gamma, Complex w, Complex phi) {
    table.row()
        .set("record", std::string("gamma"))
        .set("model", model_name)
        .set("level", level_1based)
        .set("value_re", gamma)
        .commit();
    table.row()
        .set("record", std::string("w_abs"))
        .set("model", model_name)
        .set("level", level_1based)
        .set("value_re", std::abs(w))
        .commit();
    table.row()
        .set("record", std::string("phi"))
        .set("model", model_name)
        .set("level", level_1based)
        .set("value_re", phi.real())
        .set("value_im", phi.imag())
        .commit();
}

}  // namespace

RunResult cmd_perturb(const RunConfig& cfg) {
    RunResult out;
    rspt::PerturbationExpansion exp =
        cfg.custom_model ? custom_expansion(cfg)
                         : box_expansion_at(cfg.box_model(), cfg.perturb_l, cfg.order);
    const int N = exp.dim();
    const std::string model_name =
        cfg.custom_model ? std::string("custom") : models::to_string(cfg.kind);

    for (int l = 0; l <= exp.order(); ++l)
        for (int n = 0; n < N; ++n)
            out.table.row()
                .set("record", std::string("energy"))
                .set("model", model_name)
                .set("level", n + 1)
                .set("order", l)
                .set("value_re", exp.energy(l, n))
                .commit();

    for (int l = 0; l <= exp.order(); ++l)
        for (int m = 0; m < N; ++m)
            for (int n = 0; n < N; ++n) {
                Complex c = exp.coeff(l, m, n);
                if (l > 0 && c == Complex(0.0, 0.0)) continue;
                out.table.row()
                    .set("record", std::string("coef"))
                    .set("model", model_name)
                    .set("m", m + 1)
                    .set("n", n + 1)
                    .set("order", l)
                    .set("value_re", c.real())
                    .set("value_im", c.imag())
                    .commit();
            }

    for (double eps : cfg.perturb_eps)
        for (int level : cfg.levels) {
            out.table.row()
                .set("record", std::string("residual"))
                .set("model", model_name)
                .set("level", level)
                .set("eps", eps)
                .set("value_re", rspt::residual_norm(exp, level - 1, eps))
                .commit();
            out.table.row()
                .set("record", std::string("conv_ratio"))
                .set("model", model_name)
                .set("level", level)
                .set("eps", eps)
                .set("value_re", rspt::convergence_ratio(exp, level - 1, eps))
                .commit();
        }
    return out;
}

RunResult cmd_connection(const RunConfig& cfg) {
    RunResult out;
    BoxModel model = cfg.box_model();
    ParameterPath path = cfg.build_path();
    const std::string model_name = models::to_string(cfg.kind);
    const bool has_coupling =
        cfg.kind == ModelKind::transformed || cfg.kind == ModelKind::effective_plus ||
        cfg.kind == ModelKind::effective_minus;
    const int K = has_coupling ? std::min(cfg.order, 3) : 0;

    // adjust path coordinates for kinds without an R coordinate
    ParameterPath working = [&] {
        if (has_coupling) return path;
        std::vector<PathSample> samples;
        for (const auto& s : path.samples())
            samples.push_back({s.time, ParameterPoint{{"L", s.point.get("L")}}});
        return ParameterPath(std::move(samples), path.closed());
    }();

    // per-level S_n with the tail bound
    for (int level : cfg.levels) {
        berry::SnSum sn = berry::leading_connection_sum(level, cfg.sn_cutoff);
        out.table.row()
            .set("record", std::string("sn"))
            .set("model", model_name)
            .set("level", level)
            .set("value_re", sn.value)
            .set("value_im", sn.tail_bound)
            .commit();
    }

    // per-sample connection coefficients
    std::vector<berry::ConnectionSeries> series;
    if (has_coupling) {
        auto factory = expansion_factory(model, K);
        auto zeroth = zeroth_family(model);
        auto eps_rule = models::coupling_matrix(model, cfg.physics.l0).eps_rule;
        const auto& samples = working.samples();
        series.resize(samples.size());
        const std::ptrdiff_t S = static_cast<std::ptrdiff_t>(samples.size());
#pragma omp parallel for schedule(static) num_threads(par::max_threads())
        for (std::ptrdiff_t k = 0; k < S; ++k)
            series[k] = berry::connection_perturbative(factory, zeroth, eps_rule,
                                                       samples[k].point, K);
        for (std::ptrdiff_t k = 0; k < S; ++k) {
            const auto& p = samples[k].point;
            for (int level : cfg.levels)
                for (int a = 0; a < p.dims(); ++a)
                    for (int j = 0; j <= K; ++j)
                        out.table.row()
                            .set("record", std::string("connection"))
                            .set("model", model_name)
                            .set("sample", static_cast<long long>(k))
                            .set("level", level)
                            .set("order", j)
                            .set("dir", p.name(a))
                            .set("L", p.get("L"))
                            .set("R", p.get_or("R", 0.0))
                            .set("eps", series[k].eps)
                            .set("value_re", series[k].per_order[j](level - 1, a))
                            .commit();
        }
    } else {
        // kinds without a coupling still expose the zeroth-order connection
        models::BasisFamily family = models::basis_family(model);
        const auto& samples = working.samples();
        for (size_t k = 0; k < samples.size(); ++k) {
            Matrix a0 = berry::connection_zeroth(family, samples[k].point, "L", 1e-5);
            for (int level : cfg.levels)
                out.table.row()
                    .set("record", std::string("connection"))
                    .set("model", model_name)
                    .set("sample", static_cast<long long>(k))
                    .set("level", level)
                    .set("order", 0)
                    .set("dir", std::string("L"))
                    .set("L", samples[k].point.get("L"))
                    .set("value_re", a0(level - 1, level - 1).real())
                    .commit();
        }
    }

    // oracle discrete Berry phase vs the perturbative loop integral
    auto snaps = models::snapshots_along_path(model, working);
    auto overlap = models::measure_overlap_fn(model);
    for (int level : cfg.levels) {
        double oracle = berry::discrete_berry_phase(snaps, level - 1, working.closed(), overlap);
        out.table.row()
            .set("record", std::string("gamma_oracle"))
            .set("model", model_name)
            .set("level", level)
            .set("value_re", oracle)
            .commit();
        if (has_coupling) {
            berry::PerturbativePathIntegral pert = berry::connection_path_integral(
                expansion_factory(model, K), zeroth_family(model),
                models::coupling_matrix(model, cfg.physics.l0).eps_rule, working, K, level - 1);
            out.table.row()
                .set("record", std::string("gamma_pert"))
                .set("model", model_name)
                .set("level", level)
                .set("value_re", pert.gamma_non_exact)
                .set("value_im", std::abs(pert.f_delta))
                .commit();
            double ratio = std::abs(oracle) > 1e-300 ? pert.gamma_non_exact / oracle : 0.0;
            out.table.row()
                .set("record", std::string("gamma_ratio"))
                .set("model", model_name)
                .set("level", level)
                .set("value_re", ratio)
                .commit();
        }
        Complex w = overlap(snaps.front(), snaps.back(), level - 1);
        emit_phase_rows(out.table, model_name, level, oracle, w,
                        berry::noncyclic_phase(snaps, level - 1, oracle, overlap));
    }
    return out;
}

RunResult cmd_evolve(const RunConfig& cfg) {
    RunResult out;
    BoxModel model = cfg.box_model();
    dynamics::WallSchedule sched = build_schedule(cfg);
    const std::string model_name = models::to_string(cfg.kind);

    double dt = cfg.dt > 0.0 ? cfg.dt : dynamics::default_dt(model, sched);
    double store_dt = cfg.store_dt > 0.0 ? cfg.store_dt : sched.tau / 256.0;

    const int level = cfg.levels.front() - 1;
    ParameterPath path = schedule_path(model, sched, 16);
    Vector psi0;
    {
        OperatorMatrix h0 =
            models::fixed_frame_hamiltonian(model, sched.L(0.0), sched.Ldot(0.0));
        SpectrumSnapshot s0 = SpectrumSnapshot::compute(h0, path.samples().front().point);
        psi0 = s0.states.col(level);
    }

    dynamics::EvolutionResult result = dynamics::propagate(model, sched, psi0, dt, store_dt);
    dynamics::PhaseSeries phases = dynamics::extract_phases(result, model, sched, level);

    for (size_t k = 0; k < phases.times.size(); ++k) {
        const PhaseRecord& rec = phases.records[k];
        auto emit = [&](const char* record, double value) {
            out.table.row()
                .set("record", std::string(record))
                .set("model", model_name)
                .set("level", level + 1)
                .set("time", phases.times[k])
                .set("L", sched.L(phases.times[k]))
                .set("value_re", value)
                .commit();
        };
        emit("alpha", rec.total);
        emit("delta", rec.dynamical);
        emit("gamma", rec.geometric);
        emit("w_abs", std::abs(rec.overlap));
        emit("phi_re", rec.noncyclic_phase.real());
        emit("phi_im", rec.noncyclic_phase.imag());
        emit("norm", result.norms[k]);
        emit("population", phases.population[k]);
    }
    out.table.row()
        .set("record", std::string("max_leak"))
        .set("model", model_name)
        .set("level", level + 1)
        .set("value_re", phases.max_leaked)
        .commit();
    out.table.row()
        .set("record", std::string("final_infidelity"))
        .set("model", model_name)
        .set("level", level + 1)
        .set("value_re", 1.0 - phases.population.back())
        .commit();
    out.table.row()
        .set("record", std::string("norm_drift_per_time"))
        .set("model", model_name)
        .set("value_re", result.max_norm_drift_per_time)
        .commit();

    if (!cfg.out_states.empty()) {
        nlohmann::json j;
        j["times"] = result.times;
        std::vector<std::vector<double>> re, im;
        for (const auto& s : result.states) {
            std::vector<double> r(s.size()), i(s.size());
            for (int q = 0; q < s.size(); ++q) {
                r[q] = s[q].real();
                i[q] = s[q].imag();
            }
            re.push_back(std::move(r));
            im.push_back(std::move(i));
        }
        j["real"] = re;
        j["imag"] = im;
        out.states_json = j.dump();
    }
    return out;
}

RunResult cmd_compare(const RunConfig& cfg) {
    RunResult out;
    const std::vector<ModelKind> kinds = {ModelKind::conventional_box, ModelKind::transformed,
                                          ModelKind::effective_plus, ModelKind::effective_minus};
    for (ModelKind kind : kinds) {
        BoxModel model{kind, cfg.physics, cfg.basis_size, {}};
        ParameterPath path = [&] {
            if (cfg.path_type != PathType::none) {
                if (kind == ModelKind::conventional_box || kind == ModelKind::effective_mass) {
                    std::vector<PathSample> samples;
                    for (const auto& s : cfg.build_path().samples())
                        samples.push_back({s.time, ParameterPoint{{"L", s.point.get("L")}}});
                    return ParameterPath(std::move(samples), cfg.build_path().closed());
                }
                return cfg.build_path();
            }
            dynamics::WallSchedule sched = build_schedule(cfg);
            return schedule_path(model, sched, 256);
        }();
        auto snaps = models::snapshots_along_path(model, path);
        auto overlap = models::measure_overlap_fn(model);
        for (int level : cfg.levels) {
            double gamma = berry::discrete_berry_phase(snaps, level - 1, path.closed(), overlap);
            Complex w = overlap(snaps.front(), snaps.back(), level - 1);
            Complex phi = berry::noncyclic_phase(snaps, level - 1, gamma, overlap);
            emit_phase_rows(out.table, models::to_string(kind), level, gamma, w, phi);
        }
    }
    return out;
}

RunResult cmd_sweep(const RunConfig& cfg) {
    if (cfg.sweep_key.empty() || cfg.sweep_values.empty() || cfg.sweep_command.empty())
        throw ConfigError("[sweep] needs key, values and command");
    if (cfg.sweep_command == "sweep") throw ConfigError("sweep cannot nest");
    size_t dot = cfg.sweep_key.find('.');
    if (dot == std::string::npos)
        throw ConfigError("sweep.key must look like section.key");
    std::string section = cfg.sweep_key.substr(0, dot);
    std::string key = cfg.sweep_key.substr(dot + 1);

    const int tasks = static_cast<int>(cfg.sweep_values.size());
    std::vector<RunResult> results(tasks);
    std::vector<std::string> errors(tasks);

#pragma omp parallel for schedule(dynamic) num_threads(par::max_threads())
    for (int k = 0; k < tasks; ++k) {
        try {
            ConfigFile file = cfg.raw;
            file.set(section, key, format_number(cfg.sweep_values[k]));
            RunConfig sub = make_run_config(cfg.sweep_command, file);
            results[k] = run_command(sub);
        } catch (const std::exception& e) {
            errors[k] = e.what();
        }
    }
    for (int k = 0; k < tasks; ++k)
        if (!errors[k].empty())
            throw Error("sweep task " + format_number(cfg.sweep_values[k]) + ": " + errors[k]);

    // merge row buffers in configuration order
    RunResult out;
    for (int k = 0; k < tasks; ++k) {
        ResultTable tagged;
        for (size_t r = 0; r < results[k].table.size(); ++r) {
            auto row = tagged.row();
            const auto& cells = results[k].table.at(r);
            for (size_t c = 0; c < cells.size(); ++c) {
                const auto& cell = cells[c];
                const std::string& col = results[k].table.columns()[c];
                if (std::holds_alternative<double>(cell))
                    row.set(col, std::get<double>(cell));
                else if (std::holds_alternative<long long>(cell))
                    row.set(col, std::get<long long>(cell));
                else if (std::holds_alternative<std::string>(cell))
                    row.set(col, std::get<std::string>(cell));
            }
            row.set("sweep", cfg.sweep_values[k]);
            row.commit();
        }
        out.table.append(tagged);
    }
    return out;
}

RunResult run_command(const RunConfig& cfg) {
    if (cfg.command == "perturb") return cmd_perturb(cfg);
    if (cfg.command == "connection") return cmd_connection(cfg);
    if (cfg.command == "evolve") return cmd_evolve(cfg);
    if (cfg.command == "compare") return cmd_compare(cfg);
    if (cfg.command == "sweep") return cmd_sweep(cfg);
    throw ConfigError("unknown command: " + cfg.command);
}

std::string run_and_write(const RunConfig& cfg) {
    auto start = std::chrono::steady_clock::now();
    RunResult result = run_command(cfg);
    double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    result.table.write_csv(cfg.out_table);
    if (!cfg.out_states.empty() && !result.states_json.empty()) {
        std::ofstream out(cfg.out_states, std::ios::binary);
        if (!out) throw Error("cannot write states to " + cfg.out_states);
        out << result.states_json;
    }

    nlohmann::json meta;
    meta["command"] = cfg.command;
    meta["config_hash"] = cfg.raw.hash();
    meta["version"] = kVersion;
    meta["rows"] = result.table.size();
    meta["elapsed_s"] = elapsed;
    meta["config"] = cfg.raw.canonical_dump();
    if (!cfg.out_metadata.empty()) {
        std::ofstream out(cfg.out_metadata, std::ios::binary);
        if (!out) throw Error("cannot write metadata to " + cfg.out_metadata);
        out << meta.dump(2) << "\n";
    }

    nlohmann::json summary;
    summary["status"] = "ok";
    summary["command"] = cfg.command;
    summary["rows"] = result.table.size();
    summary["table"] = cfg.out_table;
    summary["config_hash"] = cfg.raw.hash();
    summary["elapsed_s"] = elapsed;
    return summary.dump();
}

}  // namespace geomphase::cli
