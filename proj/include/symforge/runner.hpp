#pragma once

// Commands behind the symforge executable. Each one is a pure function of
// the resolved configuration; files land in <output.dir>/<command>-<hash>.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "bandit.hpp"
#include "errors.hpp"
#include "gradcheck.hpp"
#include "group.hpp"
#include "invariant_net.hpp"
#include "io.hpp"
#include "oracle.hpp"
#include "relaxed.hpp"
#include "selection.hpp"
#include "tasks.hpp"

namespace symforge {

// ---------------------------------------------------------------------------
// Configuration

struct task_section {
    std::string kind = "polynomial";  // polynomial | quadrangle
    std::string name = "Z_I(5)";
    std::size_t n = 0;                // 0: the polynomial's natural size
    std::size_t train = 64, validation = 480, test = 4800;
    std::string data_dir;             // load splits from a gen-data directory instead
};

struct arms_section {
    std::size_t max_k = 0;  // 0: no limit
    std::vector<group_kind> kinds{group_kind::symmetric, group_kind::dihedral, group_kind::cyclic};
    std::vector<group_descriptor> list;  // explicit arms, overriding enumeration
};

struct sim_section {
    std::vector<std::size_t> horizons{100, 200, 400, 800};
    std::size_t trials = 200;
    double sigma = 0.1;
    double nu = 0.2;
    vec mu_star{0.2, 0.0, -0.2, -0.4, -0.6};
    std::vector<vec> arms;  // empty: unit vectors
};

struct run_config {
    std::uint64_t seed = 0;
    task_section task;
    arms_section arms;
    discovery_config bandit;  // T = 0 resolves to 4n
    sim_section sim;
    bool sgd_only = false;
    std::string output_dir = "runs";
    std::string suite = "orbits";
    std::size_t verify_trials = 100;
};

inline discovery_config default_discovery() {
    discovery_config c;
    c.T = 0;
    c.train.optimizer = optimizer_kind::adam;
    c.train.lr_initial = 1e-2;
    return c;
}

inline run_config default_config() {
    run_config c;
    c.bandit = default_discovery();
    return c;
}

namespace detail {

template <typename T>
void take(const json& j, const char* key, T& out) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw parse_error(std::string("bad value for '") + key + "': " + e.what(), 0);
    }
}

}  // namespace detail

inline run_config parse_config(const json& doc) {
    run_config c = default_config();
    require_keys(doc, "root", {"seed", "task", "arms", "bandit", "training", "output", "verify"});
    detail::take(doc, "seed", c.seed);

    if (doc.contains("task")) {
        const auto& t = doc.at("task");
        require_keys(t, "task", {"kind", "name", "n", "train", "validation", "test", "data_dir"});
        detail::take(t, "kind", c.task.kind);
        detail::take(t, "name", c.task.name);
        detail::take(t, "n", c.task.n);
        detail::take(t, "train", c.task.train);
        detail::take(t, "validation", c.task.validation);
        detail::take(t, "test", c.task.test);
        detail::take(t, "data_dir", c.task.data_dir);
        if (c.task.kind != "polynomial" && c.task.kind != "quadrangle")
            throw parse_error("task.kind must be 'polynomial' or 'quadrangle', got '" + c.task.kind + "'", 0);
    }
    if (doc.contains("arms")) {
        const auto& a = doc.at("arms");
        require_keys(a, "arms", {"max_k", "kinds", "list"});
        detail::take(a, "max_k", c.arms.max_k);
        if (a.contains("kinds")) {
            c.arms.kinds.clear();
            for (const auto& k : a.at("kinds")) c.arms.kinds.push_back(group_kind_from_string(k.get<std::string>()));
        }
        if (a.contains("list"))
            for (const auto& d : a.at("list")) c.arms.list.push_back(descriptor_from_json(d));
    }
    if (doc.contains("bandit")) {
        const auto& b = doc.at("bandit");
        require_keys(b, "bandit",
                     {"T", "nu", "loss_cap", "reward", "reward_source", "center_rewards", "cold_start", "top_k", "recommend",
                      "sim"});
        detail::take(b, "T", c.bandit.T);
        detail::take(b, "nu", c.bandit.nu);
        detail::take(b, "loss_cap", c.bandit.loss_cap);
        if (b.contains("reward")) c.bandit.reward = reward_kind_from(b.at("reward").get<std::string>());
        if (b.contains("reward_source")) c.bandit.source = reward_source_from(b.at("reward_source").get<std::string>());
        detail::take(b, "center_rewards", c.bandit.center_rewards);
        detail::take(b, "cold_start", c.bandit.cold_start);
        detail::take(b, "top_k", c.bandit.top_k);
        if (b.contains("recommend")) c.bandit.recommend = recommendation_from(b.at("recommend").get<std::string>());
        if (b.contains("sim")) {
            const auto& s = b.at("sim");
            require_keys(s, "bandit.sim", {"horizons", "trials", "sigma", "nu", "mu_star", "arms"});
            detail::take(s, "horizons", c.sim.horizons);
            detail::take(s, "trials", c.sim.trials);
            detail::take(s, "sigma", c.sim.sigma);
            detail::take(s, "nu", c.sim.nu);
            detail::take(s, "mu_star", c.sim.mu_star);
            detail::take(s, "arms", c.sim.arms);
        }
    }
    if (doc.contains("training")) {
        const auto& t = doc.at("training");
        require_keys(t, "training",
                     {"epochs", "batch_size", "lr", "lr_decay", "loss", "optimizer", "p", "h", "pooling", "sgd_only"});
        auto& tc = c.bandit.train;
        detail::take(t, "epochs", tc.epochs);
        detail::take(t, "batch_size", tc.batch_size);
        detail::take(t, "lr", tc.lr_initial);
        detail::take(t, "lr_decay", tc.lr_decay);
        if (t.contains("loss")) tc.loss = loss_kind_from(t.at("loss").get<std::string>());
        if (t.contains("optimizer")) tc.optimizer = optimizer_from(t.at("optimizer").get<std::string>());
        detail::take(t, "p", tc.arch.p);
        detail::take(t, "h", tc.arch.h);
        if (t.contains("pooling")) tc.arch.pooling = pooling_from(t.at("pooling").get<std::string>());
        detail::take(t, "sgd_only", c.sgd_only);
    }
    if (doc.contains("output")) {
        require_keys(doc.at("output"), "output", {"dir"});
        detail::take(doc.at("output"), "dir", c.output_dir);
    }
    if (doc.contains("verify")) {
        require_keys(doc.at("verify"), "verify", {"suite", "trials"});
        detail::take(doc.at("verify"), "suite", c.suite);
        detail::take(doc.at("verify"), "trials", c.verify_trials);
    }
    return c;
}

inline run_config load_config(const std::string& path) {
    try {
        return parse_config(read_json_file(path));
    } catch (const parse_error& e) {
        throw parse_error(path + ": " + e.message(), e.line());
    }
}

/// Every field, defaults included; parse_config(echo(c)) reproduces c.
inline json echo(const run_config& c) {
    json kinds = json::array();
    for (auto k : c.arms.kinds) kinds.push_back(std::string(to_string(k)));
    json list = json::array();
    for (const auto& d : c.arms.list) list.push_back(to_json(d));
    const auto& b = c.bandit;
    const auto& t = b.train;
    return {
        {"seed", c.seed},
        {"task",
         {{"kind", c.task.kind},
          {"name", c.task.name},
          {"n", c.task.n},
          {"train", c.task.train},
          {"validation", c.task.validation},
          {"test", c.task.test},
          {"data_dir", c.task.data_dir}}},
        {"arms", {{"max_k", c.arms.max_k}, {"kinds", kinds}, {"list", list}}},
        {"bandit",
         {{"T", b.T},
          {"nu", b.nu},
          {"loss_cap", b.loss_cap},
          {"reward", to_string(b.reward)},
          {"reward_source", to_string(b.source)},
          {"center_rewards", b.center_rewards},
          {"cold_start", b.cold_start},
          {"top_k", b.top_k},
          {"recommend", to_string(b.recommend)},
          {"sim",
           {{"horizons", c.sim.horizons},
            {"trials", c.sim.trials},
            {"sigma", c.sim.sigma},
            {"nu", c.sim.nu},
            {"mu_star", c.sim.mu_star},
            {"arms", c.sim.arms}}}}},
        {"training",
         {{"epochs", t.epochs},
          {"batch_size", t.batch_size},
          {"lr", t.lr_initial},
          {"lr_decay", t.lr_decay},
          {"loss", to_string(t.loss)},
          {"optimizer", to_string(t.optimizer)},
          {"p", t.arch.p},
          {"h", t.arch.h},
          {"pooling", to_string(t.arch.pooling)},
          {"sgd_only", c.sgd_only}}},
        {"output", {{"dir", c.output_dir}}},
        {"verify", {{"suite", c.suite}, {"trials", c.verify_trials}}},
    };
}

inline std::string config_hash(const run_config& c) { return fnv1a_hex(echo(c).dump()); }

// ---------------------------------------------------------------------------
// Shared plumbing

enum exit_code : int { exit_ok = 0, exit_failure = 1, exit_usage = 2 };

struct command_result {
    int code = exit_ok;
    std::filesystem::path dir;
    json report;
};

namespace detail {

using clock = std::chrono::steady_clock;

inline double seconds_since(clock::time_point t0) {
    return std::chrono::duration<double>(clock::now() - t0).count();
}

inline std::filesystem::path prepare_dir(const run_config& c, const std::string& command) {
    std::filesystem::path dir = std::filesystem::path(c.output_dir) / (command + "-" + config_hash(c));
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw error("cannot create output directory '" + dir.string() + "': " + ec.message());
    return dir;
}

inline std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

template <typename F>
void write_with(const std::filesystem::path& path, F&& body) {
    std::ostringstream os;
    body(os);
    write_text_file(path.string(), os.str());
}

inline json arm_json(const group_descriptor& G) {
    json j = to_json(G);
    j["label"] = describe(G);
    return j;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Data

struct task_data {
    dataset_splits splits;
    std::optional<group_descriptor> truth;  // known symmetry of a builtin task
};

/// Splits generated from the task section, or loaded from task.data_dir.
inline task_data materialize_task(run_config& c) {
    task_data out;
    if (!c.task.data_dir.empty()) {
        const std::filesystem::path dir(c.task.data_dir);
        auto load = [&](const char* name) { return load_dataset((dir / name).string()); };
        out.splits.train = load("train.csv");
        out.splits.validation = std::filesystem::exists(dir / "validation.csv") ? load("validation.csv") : dataset{};
        out.splits.test = std::filesystem::exists(dir / "test.csv") ? load("test.csv") : dataset{};
        const auto manifest = dir / "manifest.json";
        if (std::filesystem::exists(manifest)) {
            const json m = read_json_file(manifest.string());
            if (m.contains("scaling")) {
                target_scaling s{m["scaling"].at("offset").get<double>(), m["scaling"].at("scale").get<double>()};
                for (auto* d : {&out.splits.train, &out.splits.validation, &out.splits.test}) d->scaling = s;
            }
        }
        if (out.splits.validation.empty()) out.splits.validation.n = out.splits.train.n;
        c.task.n = out.splits.train.n;
    } else if (c.task.kind == "quadrangle") {
        out.splits.train = gen_quadrangle_dataset(c.task.train, c.seed, 1);
        const auto s = fit_min_max(out.splits.train);
        out.splits.train = apply_scaling(std::move(out.splits.train), s);
        out.splits.validation =
            c.task.validation ? apply_scaling(gen_quadrangle_dataset(c.task.validation, c.seed, 2), s) : dataset{8, {}, {}, s};
        out.splits.test = c.task.test ? apply_scaling(gen_quadrangle_dataset(c.task.test, c.seed, 3), s) : dataset{8, {}, {}, s};
        c.task.n = 8;
    } else {
        const auto spec = builtin_polynomial(c.task.name, c.task.n);
        c.task.n = spec.poly.n();
        out.splits = gen_poly_splits(spec, c.task.train, c.task.validation, c.task.test, c.seed);
        out.truth = spec.descriptor;
    }
    if (c.bandit.T == 0) c.bandit.T = 4 * c.task.n;
    return out;
}

inline std::vector<arm_feature> build_arms(const run_config& c, std::size_t n) {
    if (!c.arms.list.empty()) {
        std::vector<arm_feature> arms;
        for (const auto& d : c.arms.list) {
            if (d.n() != n) throw dimension_error("arms.list: descriptor n differs from the task's n");
            arms.push_back(encode_arm(d));
        }
        return arms;
    }
    std::vector<arm_feature> arms;
    for (auto& a : enumerate_arms(n)) {
        const auto& d = a.descriptor;
        if (c.arms.max_k && d.k() > c.arms.max_k) continue;
        if (std::find(c.arms.kinds.begin(), c.arms.kinds.end(), d.kind()) == c.arms.kinds.end()) continue;
        arms.push_back(std::move(a));
    }
    if (arms.empty()) throw invalid_descriptor("arms: the filters leave no arms");
    return arms;
}

// ---------------------------------------------------------------------------
// gen-data

inline command_result cmd_gen_data(run_config c, std::ostream& log) {
    const auto t0 = detail::clock::now();
    if (!c.task.data_dir.empty()) throw parse_error("gen-data: task.data_dir must be empty", 0);
    const auto data = materialize_task(c);
    command_result res;
    res.dir = detail::prepare_dir(c, "gen-data");
    const std::pair<const char*, const dataset*> files[] = {
        {"train.csv", &data.splits.train}, {"validation.csv", &data.splits.validation}, {"test.csv", &data.splits.test}};
    json rows;
    for (const auto& [name, d] : files) {
        save_dataset((res.dir / name).string(), *d);
        rows[name] = d->size();
    }
    const auto& s = data.splits.train.scaling;
    res.report = {{"command", "gen-data"},
                  {"config", echo(c)},
                  {"seed", c.seed},
                  {"n", c.task.n},
                  {"rows", rows},
                  {"scaling", {{"offset", s.offset}, {"scale", s.scale}}},
                  {"timings", {{"total_s", detail::seconds_since(t0)}}}};
    if (data.truth) res.report["symmetry"] = detail::arm_json(*data.truth);
    write_json_file((res.dir / "manifest.json").string(), res.report);
    log << "wrote " << res.dir.string() << '\n';
    return res;
}

// ---------------------------------------------------------------------------
// discover

namespace detail {

inline void write_dense_csv(std::ostream& os, const vec& m, std::size_t rows, std::size_t cols) {
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) os << (c ? "," : "") << fmt(m[r * cols + c]);
        os << '\n';
    }
}

inline command_result discover_sgd_only(run_config& c, const task_data& data, command_result res,
                                        detail::clock::time_point t0, std::ostream& log) {
    log << "training relaxed M1/M2 jointly with phi\n";
    const auto fit = train_relaxed(data.splits.train, c.bandit.train);
    const auto& val = data.splits.validation.empty() ? data.splits.train : data.splits.validation;
    const double scale = val.scaling.scale;
    const std::size_t n = c.task.n;
    write_with(res.dir / "m1.csv", [&](std::ostream& os) { write_dense_csv(os, fit.model.m1, n, n); });
    write_with(res.dir / "m2_gate.csv", [&](std::ostream& os) { write_dense_csv(os, fit.model.gate, n, n); });
    res.report = {{"command", "discover"},
                  {"mode", "sgd_only"},
                  {"config", echo(c)},
                  {"seed", c.seed},
                  {"train_loss", fit.final_loss},
                  {"validation_mae", evaluate_relaxed(fit.model, val, metric::mae) * scale},
                  {"m1", "m1.csv"},
                  {"m2_gate", "m2_gate.csv"},
                  {"timings", {{"total_s", seconds_since(t0)}}}};
    write_json_file((res.dir / "report.json").string(), res.report);
    return res;
}

}  // namespace detail

inline command_result cmd_discover(run_config c, std::ostream& log, std::ostream* progress = nullptr) {
    const auto t0 = detail::clock::now();
    const auto data = materialize_task(c);
    c.bandit.seed = c.seed;
    command_result res;
    res.dir = detail::prepare_dir(c, "discover");
    if (c.sgd_only) return detail::discover_sgd_only(c, data, std::move(res), t0, log);

    const auto arms = build_arms(c, c.task.n);
    log << arms.size() << " arms, T=" << c.bandit.T << '\n';
    const auto t_search = detail::clock::now();
    const auto found = run_discovery(arms, data.splits.train, data.splits.validation, c.bandit, progress);
    const double search_s = detail::seconds_since(t_search);

    detail::write_with(res.dir / "pulls.csv", [&](std::ostream& os) { write_pull_log_csv(os, arms, found.log); });
    detail::write_with(res.dir / "scores.csv", [&](std::ostream& os) {
        os << "rank,arm,score\n";
        for (std::size_t r = 0; r < found.ranking.size(); ++r) {
            const auto ai = found.ranking[r];
            os << r + 1 << ",\"" << describe(arms[ai].descriptor) << "\"," << detail::fmt(found.scores[ai]) << '\n';
        }
    });

    json top = json::array();
    for (std::size_t r = 0; r < found.top.size(); ++r) {
        const auto& t = found.top[r];
        json j = detail::arm_json(arms[t.arm].descriptor);
        j["rank"] = r + 1;
        j["score"] = t.score;
        j["pulls"] = t.pulls;
        j["validation_mae"] = std::isfinite(t.validation_mae) ? json(t.validation_mae) : json(nullptr);
        top.push_back(j);
    }

    const auto& winner = arms[found.top.front().arm].descriptor;
    const auto sp = make_selection(winner);
    detail::write_with(res.dir / "m1.csv", [&](std::ostream& os) { write_triples_csv(os, sp.m1); });
    detail::write_with(res.dir / "m2.csv", [&](std::ostream& os) { write_triples_csv(os, sp.m2); });
    detail::write_with(res.dir / "m1.txt", [&](std::ostream& os) { write_dense_text(os, sp.m1); });
    detail::write_with(res.dir / "m2.txt", [&](std::ostream& os) { write_dense_text(os, sp.m2); });

    // the winner's trained model must be exactly invariant under its group
    json verification;
    if (auto it = found.trained.find(found.top.front().arm); it != found.trained.end()) {
        auto rng = make_stream(c.seed, 11);
        const auto xs = uniform_samples(c.task.n, 100, rng);
        const phi_params& params = it->second;
        const auto rep = check_invariance([&](const vec& x) { return forward(params, sp, x); }, winner, xs, 1e-9);
        verification["invariance"] = {
            {"max_violation", rep.max_violation}, {"checks", rep.checks}, {"passed", rep.passed()}};
        if (!data.splits.test.empty())
            verification["test_mae"] = evaluate(params, sp, data.splits.test, metric::mae) * data.splits.test.scaling.scale;
    }

    res.report = {{"command", "discover"},
                  {"mode", "bandit"},
                  {"config", echo(c)},
                  {"seed", c.seed},
                  {"arms_considered", arms.size()},
                  {"top", top},
                  {"pull_log", "pulls.csv"},
                  {"scores", "scores.csv"},
                  {"m1", "m1.csv"},
                  {"m2", "m2.csv"},
                  {"m1_dense", "m1.txt"},
                  {"m2_dense", "m2.txt"},
                  {"verification", verification},
                  {"timings", {{"search_s", search_s}, {"total_s", detail::seconds_since(t0)}}}};
    if (data.truth) {
        const auto want = encode_arm(*data.truth).bits;
        json truth = detail::arm_json(*data.truth);
        for (std::size_t r = 0; r < found.ranking.size(); ++r)
            if (arms[found.ranking[r]].bits == want) truth["rank"] = r + 1;
        res.report["truth"] = truth;
    }
    write_json_file((res.dir / "report.json").string(), res.report);
    log << "top: ";
    for (const auto& t : top) log << t["label"].get<std::string>() << ' ';
    log << "\nwrote " << res.dir.string() << '\n';
    return res;
}

// ---------------------------------------------------------------------------
// verify

inline const std::vector<std::string>& suite_names() {
    static const std::vector<std::string> names{"orbits", "structure", "product", "nonreal", "gradients", "invariance"};
    return names;
}

namespace detail {

struct suite_output {
    bool passed = true;
    std::string csv;
    json summary;
};

inline suite_output suite_orbits(const run_config& c) {
    suite_output out;
    std::ostringstream os;
    os << "kind,k,rows,group_order,samples,degenerate,step1,step2,step3,step4\n";
    json cases = json::array();
    for (auto kind : {group_kind::symmetric, group_kind::cyclic, group_kind::dihedral})
        for (std::size_t k = 2; k <= 5; ++k) {
            const auto r = verify_orbit_mapping(kind, k, c.verify_trials, c.seed);
            os << to_string(kind) << ',' << k << ',' << r.rows << ',' << r.group_order << ',' << r.samples << ','
               << r.degenerate << ',' << r.injectivity_violations << ',' << r.equivariance_violations << ','
               << r.image_violations << ',' << r.orbit_violations << '\n';
            out.passed = out.passed && r.passed();
            cases.push_back({{"kind", to_string(kind)}, {"k", k}, {"violations", r.violations()}});
        }
    const auto e = search_set_e(4, c.verify_trials, c.seed);
    out.passed = out.passed && e.reproduced();
    json set_e = {{"k", 4},
                  {"inputs_searched", e.inputs_searched},
                  {"failing_inputs", e.failing_inputs},
                  {"distinct_failures", e.distinct_failures},
                  {"reproduced", e.reproduced()}};
    if (e.example) set_e["example"] = *e.example;
    out.summary = {{"cases", cases}, {"set_e", set_e}};
    out.csv = os.str();
    return out;
}

inline suite_output suite_structure(const run_config& c) {
    suite_output out;
    const auto r = verify_pipeline_structure(6, 5, std::max<std::size_t>(1, c.verify_trials / 10), c.seed);
    out.passed = r.passed();
    std::ostringstream os;
    os << "cases,row_violations,complement_violations,invariance_violations\n"
       << r.cases << ',' << r.row_violations << ',' << r.complement_violations << ',' << r.invariance_violations << '\n';
    out.csv = os.str();
    out.summary = {{"cases", r.cases},
                   {"violations", r.row_violations + r.complement_violations + r.invariance_violations}};
    return out;
}

inline suite_output suite_product(const run_config& c) {
    using G = group_kind;
    const std::vector<std::pair<std::vector<local_group>, std::size_t>> cases{
        {{{G::cyclic, {0, 1, 2}}, {G::symmetric, {3, 4}}}, 5},
        {{{G::dihedral, {0, 1, 2, 3}}, {G::cyclic, {4, 5, 6}}}, 7},
        {{{G::symmetric, {0, 2, 4}}, {G::dihedral, {1, 3, 5, 6}}}, 8},
        {{{G::cyclic, {0, 1, 2, 3, 4}}, {G::symmetric, {5, 6}}}, 7},
    };
    suite_output out;
    std::ostringstream os;
    os << "group,order,rows,samples,step1,step2,step3\n";
    json rows = json::array();
    for (const auto& [comps, n] : cases) {
        const auto r = verify_product_group(comps, n, c.verify_trials, c.seed);
        const auto label = describe(group_descriptor::product(comps, n));
        os << '"' << label << "\"," << r.group_order << ',' << r.rows << ',' << r.samples << ','
           << r.injectivity_violations << ',' << r.equivariance_violations << ',' << r.image_violations << '\n';
        out.passed = out.passed && r.passed();
        rows.push_back({{"group", label}, {"order", r.group_order}, {"passed", r.passed()}});
    }
    out.csv = os.str();
    out.summary = {{"cases", rows}};
    return out;
}

inline suite_output suite_nonreal(const run_config& c) {
    suite_output out;
    std::ostringstream os;
    os << "k,trials,cyclic_orbit_max,symmetric_orbit_min,violations,redraws\n";
    json rows = json::array();
    for (std::size_t k = 2; k <= 5; ++k) {
        const auto r = nonrealizability_counts(k, std::max<std::size_t>(1, c.verify_trials / 2), c.seed);
        os << k << ',' << r.trials << ',' << r.cyclic_orbit_max << ',' << r.symmetric_orbit_min << ',' << r.violations
           << ',' << r.redraws << '\n';
        out.passed = out.passed && r.passed();
        rows.push_back({{"k", k}, {"violations", r.violations}, {"contradiction", r.contradiction}});
    }
    out.csv = os.str();
    out.summary = {{"cases", rows}};
    return out;
}

inline suite_output suite_gradients(const run_config& c) {
    suite_output out;
    std::vector<gradient_check_report> reps;
    const std::size_t n = 6;
    for (auto kind : {group_kind::symmetric, group_kind::cyclic, group_kind::dihedral})
        for (auto pool : {pooling_kind::mean_selected, pooling_kind::sum_all})
            reps.push_back(check_phi_gradients(group_descriptor::local(kind, {0, 2, 3, 5}, n), pool, 20, 10, c.seed));
    reps.push_back(check_relaxed_gradients(5, 20, 10, c.seed));
    std::ostringstream os;
    os << "model,checks,max_relative_error,max_absolute_error\n";
    double worst = 0.0;
    for (const auto& r : reps) {
        os << '"' << r.label << "\"," << r.checks << ',' << fmt(r.max_relative_error) << ','
           << fmt(r.max_absolute_error) << '\n';
        worst = std::max(worst, r.max_relative_error);
        out.passed = out.passed && r.passed();
    }
    out.csv = os.str();
    out.summary = {{"max_relative_error", worst}, {"tolerance", 1e-4}};
    return out;
}

/// Trains phi briefly on each correct arm (kinds x k = 2..5 inside n = 6) on
/// a symmetrized smooth target, then checks exact invariance of the result.
inline suite_output suite_invariance(const run_config& c) {
    suite_output out;
    std::ostringstream os;
    os << "group,order,checks,max_violation\n";
    const std::size_t n = 6;
    auto rng = make_stream(c.seed, 21);
    double worst = 0.0;
    for (auto kind : {group_kind::symmetric, group_kind::cyclic, group_kind::dihedral})
        for (std::size_t k = 2; k <= 5; ++k) {
            std::vector<int> I(n);
            std::iota(I.begin(), I.end(), 0);
            std::shuffle(I.begin(), I.end(), rng);
            I.resize(k);
            const auto G = group_descriptor::local(kind, I, n);
            vec w(n);
            std::uniform_real_distribution<double> u(-1.0, 1.0);
            for (auto& v : w) v = u(rng);
            const auto target = symmetrize(
                [w](const vec& x) {
                    double s = 0.0;
                    for (std::size_t i = 0; i < x.size(); ++i) s += w[i] * x[i] * (i + 1 < x.size() ? x[i + 1] : 1.0);
                    return std::sin(s);
                },
                G);
            dataset d;
            d.n = n;
            for (const auto& x : uniform_samples(n, 32, rng)) d.push_back(x, target(x));
            train_config tc;
            tc.epochs = 20;
            tc.optimizer = optimizer_kind::adam;
            tc.lr_initial = 3e-3;
            tc.arch.p = 8;
            tc.arch.h = 12;
            tc.seed = c.seed;
            const auto sp = make_selection(G);
            const auto params = train_sgd(d, sp, tc).params;
            const auto xs = uniform_samples(n, c.verify_trials, rng);
            const auto r = check_invariance([&](const vec& x) { return forward(params, sp, x); }, G, xs, 1e-9);
            os << '"' << describe(G) << "\"," << G.order() << ',' << r.checks << ',' << fmt(r.max_violation) << '\n';
            worst = std::max(worst, r.max_violation);
            out.passed = out.passed && r.passed();
        }
    out.csv = os.str();
    out.summary = {{"max_violation", worst}, {"tolerance", 1e-9}};
    return out;
}

}  // namespace detail

inline command_result cmd_verify(run_config c, std::ostream& log) {
    const auto t0 = detail::clock::now();
    const auto& names = suite_names();
    if (std::find(names.begin(), names.end(), c.suite) == names.end()) {
        std::string valid;
        for (const auto& s : names) valid += (valid.empty() ? "" : ", ") + s;
        throw parse_error("unknown suite '" + c.suite + "' (valid: " + valid + ")", 0);
    }
    if (c.verify_trials < 1) throw parse_error("verify.trials must be >= 1", 0);
    const std::map<std::string, std::function<detail::suite_output(const run_config&)>> suites{
        {"orbits", detail::suite_orbits},     {"structure", detail::suite_structure},
        {"product", detail::suite_product},   {"nonreal", detail::suite_nonreal},
        {"gradients", detail::suite_gradients}, {"invariance", detail::suite_invariance}};
    const auto out = suites.at(c.suite)(c);
    command_result res;
    res.dir = detail::prepare_dir(c, "verify");
    write_text_file((res.dir / ("verify_" + c.suite + ".csv")).string(), out.csv);
    res.report = {{"command", "verify"},
                  {"suite", c.suite},
                  {"config", echo(c)},
                  {"seed", c.seed},
                  {"passed", out.passed},
                  {"summary", out.summary},
                  {"timings", {{"total_s", detail::seconds_since(t0)}}}};
    write_json_file((res.dir / "report.json").string(), res.report);
    res.code = out.passed ? exit_ok : exit_failure;
    log << c.suite << ": " << (out.passed ? "PASS" : "FAIL") << '\n' << out.summary.dump(2) << '\n';
    return res;
}

// ---------------------------------------------------------------------------
// bandit-sim

inline linear_instance sim_instance(const sim_section& s) {
    linear_instance inst;
    inst.mu_star = s.mu_star;
    inst.noise_sigma = s.sigma;
    if (s.arms.empty()) {
        for (std::size_t i = 0; i < s.mu_star.size(); ++i) {
            vec e(s.mu_star.size(), 0.0);
            e[i] = 1.0;
            inst.arms.push_back(e);
        }
    } else {
        inst.arms = s.arms;
    }
    return inst;
}

struct trend_check {
    double c_fit = 0.0;
    bool non_increasing = true;
    bool under_bound = true;
};

/// The rate at each horizon may not exceed the previous horizon's upper 95%
/// Wilson bound, and stays below c log(T)/T with c fitted at the first horizon.
inline trend_check check_trend(std::span<const misid_point> pts) {
    trend_check tc;
    if (pts.empty()) return tc;
    const auto T0 = static_cast<double>(pts.front().T);
    tc.c_fit = pts.front().expected_rate * T0 / std::log(T0);
    for (std::size_t i = 1; i < pts.size(); ++i) {
        if (pts[i].rate > pts[i - 1].ci_high) tc.non_increasing = false;
        const auto T = static_cast<double>(pts[i].T);
        if (pts[i].expected_rate > tc.c_fit * std::log(T) / T) tc.under_bound = false;
    }
    return tc;
}

inline command_result cmd_bandit_sim(run_config c, std::ostream& log) {
    const auto t0 = detail::clock::now();
    if (c.sim.trials == 0) throw empty_dataset("bandit.sim.trials is 0: nothing to simulate");
    const auto inst = sim_instance(c.sim);
    const auto pts = simulate_linear(inst, c.sim.horizons, c.sim.nu, c.sim.trials, c.seed);
    command_result res;
    res.dir = detail::prepare_dir(c, "bandit-sim");
    detail::write_with(res.dir / "misid.csv", [&](std::ostream& os) { write_misid_csv(os, pts); });
    const auto tr = check_trend(pts);
    res.report = {{"command", "bandit-sim"},
                  {"config", echo(c)},
                  {"seed", c.seed},
                  {"delta_min", inst.delta_min()},
                  {"misid", "misid.csv"},
                  {"trend", {{"c_fit", tr.c_fit}, {"non_increasing", tr.non_increasing}, {"under_bound", tr.under_bound}}},
                  {"timings", {{"total_s", detail::seconds_since(t0)}}}};
    write_json_file((res.dir / "report.json").string(), res.report);
    log << "wrote " << res.dir.string() << '\n';
    return res;
}

}  // namespace symforge
