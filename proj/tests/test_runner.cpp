#include <catch_amalgamated.hpp>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <symforge/runner.hpp>

using namespace symforge;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("symforge_test_" + std::to_string(::getpid())) / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

run_config quick_config(const fs::path& out) {
    auto c = default_config();
    c.task.name = "S_I(4)";
    c.task.train = 32;
    c.task.validation = 32;
    c.task.test = 64;
    c.bandit.T = 3;
    c.bandit.train.epochs = 5;
    c.bandit.train.arch.p = 4;
    c.bandit.train.arch.h = 6;
    c.arms.max_k = 3;
    c.output_dir = out.string();
    return c;
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(SYMFORGE_CLI) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path write_config(const fs::path& dir, const std::string& name, const json& j) {
    const auto p = dir / name;
    write_json_file(p.string(), j);
    return p;
}

}  // namespace

TEST_CASE("config parsing and echo") {
    const auto c = default_config();
    const json e = echo(c);
    CHECK(echo(parse_config(e)) == e);
    CHECK(config_hash(parse_config(e)) == config_hash(c));
    CHECK(echo(parse_config(json::object())) == e);

    auto other = c;
    other.seed = 1;
    CHECK(config_hash(other) != config_hash(c));

    const json doc = json::parse(R"j({"seed": 4, "task": {"name": "D_I(5)", "n": 10},
        "arms": {"kinds": ["cyclic", "dihedral"], "list": [{"kind": "cyclic", "n": 10, "index_set": [1, 2, 3]}]},
        "bandit": {"T": 7, "nu": 0.3, "reward": "clamped", "recommend": "empirical_play"}, "training": {"optimizer": "sgd", "pooling": "sum_all"}})j");
    const auto p = parse_config(doc);
    CHECK(p.seed == 4);
    CHECK(p.task.name == "D_I(5)");
    CHECK(p.arms.kinds.size() == 2);
    REQUIRE(p.arms.list.size() == 1);
    CHECK(describe(p.arms.list[0]) == "Z{1,2,3}");
    CHECK(p.bandit.T == 7);
    CHECK(p.bandit.reward == reward_kind::clamped);
    CHECK(p.bandit.recommend == recommendation::empirical_play);
    CHECK(p.bandit.train.optimizer == optimizer_kind::sgd);
    CHECK(p.bandit.train.arch.pooling == pooling_kind::sum_all);
    CHECK(echo(parse_config(echo(p))) == echo(p));

    CHECK_THROWS_AS(parse_config(json::parse(R"j({"sed": 1})j")), parse_error);
    CHECK_THROWS_AS(parse_config(json::parse(R"j({"bandit": {"tau": 1}})j")), parse_error);
    CHECK_THROWS_AS(parse_config(json::parse(R"j({"training": {"optimizer": "rmsprop"}})j")), parse_error);
    CHECK_THROWS_AS(parse_config(json::parse(R"j({"seed": "zero"})j")), parse_error);
    CHECK_THROWS_AS(parse_config(json::parse(R"j({"task": {"kind": "mnist"}})j")), parse_error);

    for (const auto& entry : fs::directory_iterator(SYMFORGE_CONFIGS)) {
        INFO(entry.path().string());
        CHECK_NOTHROW(load_config(entry.path().string()));
    }
    CHECK_THROWS_AS(load_config("/nonexistent/config.json"), error);
}

TEST_CASE("gen-data writes the requested splits deterministically") {
    const auto out = scratch("gen");
    auto c = default_config();
    c.output_dir = out.string();
    std::ostringstream log;
    const auto a = cmd_gen_data(c, log);
    CHECK(load_dataset((a.dir / "train.csv").string()).size() == 64);
    CHECK(load_dataset((a.dir / "validation.csv").string()).size() == 480);
    CHECK(load_dataset((a.dir / "test.csv").string()).size() == 4800);
    CHECK(a.report["symmetry"]["label"] == "Z{1,2,3,6,7}");
    CHECK(a.report["n"] == 10);

    const auto first = slurp(a.dir / "train.csv");
    const auto b = cmd_gen_data(c, log);
    CHECK(b.dir == a.dir);
    CHECK(slurp(b.dir / "train.csv") == first);
    CHECK(slurp(b.dir / "test.csv") == slurp(a.dir / "test.csv"));

    c.seed = 1;
    const auto other = cmd_gen_data(c, log);
    CHECK(other.dir != a.dir);
    CHECK(slurp(other.dir / "train.csv") != first);

    c.task.name = "Z_I(9)";
    try {
        cmd_gen_data(c, log);
        FAIL("expected rejection");
    } catch (const invalid_descriptor& e) {
        CHECK(std::string(e.what()).find("D_I(5)") != std::string::npos);
    }
}

TEST_CASE("discover with a single arm and one pull") {
    const auto out = scratch("single");
    auto c = quick_config(out);
    c.bandit.T = 1;
    c.arms.list = {group_descriptor::local(group_kind::symmetric, {0, 1, 2, 3}, 5)};
    std::ostringstream log;
    const auto r = cmd_discover(c, log);
    CHECK(r.code == exit_ok);
    REQUIRE(r.report["top"].size() == 1);
    CHECK(r.report["top"][0]["label"] == "S{1,2,3,4}");
    CHECK(r.report["top"][0]["pulls"] == 1);
    CHECK(r.report["truth"]["rank"] == 1);
    CHECK(r.report["verification"]["invariance"]["passed"] == true);
    for (const char* f : {"pulls.csv", "scores.csv", "m1.csv", "m2.csv", "m1.txt", "m2.txt", "report.json"})
        CHECK(fs::exists(r.dir / f));

    c.arms.list = {group_descriptor::local(group_kind::symmetric, {0, 1}, 6)};
    CHECK_THROWS_AS(cmd_discover(c, log), dimension_error);
}

TEST_CASE("discover reruns bitwise and from its own echo") {
    const auto out = scratch("rerun");
    const auto c = quick_config(out);
    std::ostringstream log;
    const auto a = cmd_discover(c, log);
    const auto pulls = slurp(a.dir / "pulls.csv"), scores = slurp(a.dir / "scores.csv");
    CHECK(a.report["config"]["bandit"]["T"] == 3);
    CHECK(a.report["top"].size() == 3);
    double prev = std::numeric_limits<double>::infinity();
    for (const auto& t : a.report["top"]) {
        CHECK(t["score"].get<double>() <= prev);
        prev = t["score"].get<double>();
    }

    const auto b = cmd_discover(c, log);
    CHECK(slurp(b.dir / "pulls.csv") == pulls);
    CHECK(slurp(b.dir / "scores.csv") == scores);

    const auto replay = parse_config(read_json_file((a.dir / "report.json").string())["config"]);
    fs::remove_all(a.dir);
    const auto r = cmd_discover(replay, log);
    CHECK(r.dir == a.dir);
    CHECK(slurp(r.dir / "scores.csv") == scores);
    CHECK(slurp(r.dir / "pulls.csv") == pulls);
}

TEST_CASE("discover reads generated data and the relaxed ablation runs") {
    const auto out = scratch("data_dir");
    auto c = quick_config(out);
    std::ostringstream log;
    const auto gen = cmd_gen_data(c, log);

    auto d = quick_config(out);
    d.task.data_dir = gen.dir.string();
    const auto r = cmd_discover(d, log);
    CHECK(r.report["config"]["task"]["n"] == 5);
    CHECK(r.report["verification"].contains("test_mae"));
    CHECK_FALSE(r.report.contains("truth"));

    d.task.data_dir = (out / "missing").string();
    CHECK_THROWS(cmd_discover(d, log));

    auto s = quick_config(out);
    s.sgd_only = true;
    const auto relaxed = cmd_discover(s, log);
    CHECK(relaxed.report["mode"] == "sgd_only");
    CHECK(fs::exists(relaxed.dir / "m1.csv"));
    CHECK(std::isfinite(relaxed.report["validation_mae"].get<double>()));
}

TEST_CASE("quadrangle task uses all eight coordinates") {
    const auto out = scratch("quad");
    auto c = quick_config(out);
    c.task.kind = "quadrangle";
    c.arms.max_k = 2;
    std::ostringstream log;
    const auto r = cmd_discover(c, log);
    CHECK(r.report["config"]["task"]["n"] == 8);
    CHECK(r.report["arms_considered"] == 28);
}

TEST_CASE("verify suites and the bandit simulator") {
    const auto out = scratch("verify");
    auto c = default_config();
    c.output_dir = out.string();
    c.verify_trials = 10;
    std::ostringstream log;
    for (const auto& s : suite_names()) {
        c.suite = s;
        const auto r = cmd_verify(c, log);
        INFO(s);
        CHECK(r.code == exit_ok);
        CHECK(fs::exists(r.dir / ("verify_" + s + ".csv")));
    }
    c.suite = "bogus";
    CHECK_THROWS_AS(cmd_verify(c, log), parse_error);

    c.sim.trials = 20;
    const auto a = cmd_bandit_sim(c, log);
    const auto csv = slurp(a.dir / "misid.csv");
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);
    CHECK(slurp(cmd_bandit_sim(c, log).dir / "misid.csv") == csv);
    c.sim.trials = 0;
    CHECK_THROWS_AS(cmd_bandit_sim(c, log), empty_dataset);
}

TEST_CASE("command line exit codes") {
    const auto out = scratch("cli");
    json base = echo(default_config());
    base["output"]["dir"] = out.string();
    base["verify"]["trials"] = 10;
    const auto cfg = write_config(out, "base.json", base).string();

    CHECK(run_cli("verify --config " + cfg + " --suite product --quiet") == 0);
    CHECK(run_cli("verify --config " + cfg + " --suite bogus") == 2);
    CHECK(run_cli("verify --config " + (out / "absent.json").string()) == 2);
    CHECK(run_cli("frobnicate --config " + cfg) == 2);
    CHECK(run_cli("verify") == 2);

    json zero = base;
    zero["bandit"]["sim"]["trials"] = 0;
    CHECK(run_cli("bandit-sim --config " + write_config(out, "zero.json", zero).string()) == 2);

    json unknown = base;
    unknown["task"]["colour"] = "red";
    CHECK(run_cli("gen-data --config " + write_config(out, "unknown.json", unknown).string()) == 2);

    std::ofstream(out / "broken.json") << "{ \"seed\": ";
    CHECK(run_cli("gen-data --config " + (out / "broken.json").string()) == 2);

    json sim = base;
    sim["bandit"]["sim"]["trials"] = 10;
    const auto sim_cfg = write_config(out, "sim.json", sim).string();
    REQUIRE(run_cli("bandit-sim --config " + sim_cfg + " --seed 5") == 0);
    auto c = parse_config(sim);
    c.seed = 5;
    const auto dir = out / ("bandit-sim-" + config_hash(c));
    REQUIRE(fs::exists(dir / "misid.csv"));
    const auto first = slurp(dir / "misid.csv");
    REQUIRE(run_cli("bandit-sim --config " + sim_cfg + " --seed 5") == 0);
    CHECK(slurp(dir / "misid.csv") == first);
}
