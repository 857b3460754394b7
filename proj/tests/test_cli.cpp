#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <sys/wait.h>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "ccm/lifting.hpp"
#include "support.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct RunResult {
    int exit_code;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

const char* cli_path() {
    const char* p = std::getenv("CCM_BIN");
    REQUIRE_MESSAGE(p != nullptr, "CCM_BIN must point at the ccm executable");
    return p;
}

RunResult run_cli(const std::string& args) {
    const fs::path tmp = fs::temp_directory_path();
    const fs::path out_file = tmp / "ccm_cli_stdout.txt";
    const fs::path err_file = tmp / "ccm_cli_stderr.txt";
    const std::string cmd = std::string(cli_path()) + " " + args + " > " +
                            out_file.string() + " 2> " + err_file.string();
    const int raw = std::system(cmd.c_str());
    RunResult r;
    r.exit_code = raw == -1 ? -1 : WEXITSTATUS(raw);
    r.out = slurp(out_file);
    r.err = slurp(err_file);
    return r;
}

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

// writes the toy triangle/hexagon dataset used by the train/eval tests
fs::path write_toy_dataset() {
    const fs::path dir = fresh_dir("ccm_cli_dataset");
    fs::create_directories(dir / "graphs");
    int idx = 0;
    std::ofstream labels(dir / "labels.csv");
    for (int i = 0; i < 3; ++i) {
        std::ofstream g(dir / "graphs" /
                        (std::string("g") + std::to_string(idx / 10) +
                         std::to_string(idx % 10) + ".json"));
        g << support::triangle_graph().to_json_string() << "\n";
        labels << idx << ",0\n";
        ++idx;
    }
    for (int i = 0; i < 3; ++i) {
        std::ofstream g(dir / "graphs" /
                        (std::string("g") + std::to_string(idx / 10) +
                         std::to_string(idx % 10) + ".json"));
        g << support::cycle_graph(6).to_json_string() << "\n";
        labels << idx << ",1\n";
        ++idx;
    }
    std::ofstream splits(dir / "splits.json");
    splits << R"({"train":[0,1,2,3,4,5],"val":[0,1,2,3,4,5],"test":[0,1,2,3,4,5]})" << "\n";
    return dir;
}

fs::path write_config(const fs::path& dataset, const fs::path& out) {
    const fs::path cfg_path = fs::temp_directory_path() / "ccm_cli_config.json";
    json cfg = {{"dataset", dataset.string()}, {"out", out.string()},
                {"task", "graph"},            {"lifting", "cellular"},
                {"hidden", 8},                {"layers", 1},
                {"state_dim", 4},             {"expand", 2},
                {"dropout", 0.01},            {"lr", 0.05},
                {"epochs", 8},                {"batch_size", 8},
                {"seed", 3}};
    std::ofstream f(cfg_path);
    f << cfg.dump(2) << "\n";
    return cfg_path;
}

}  // namespace

TEST_CASE("lift command summarizes cell counts") {
    const fs::path tmp = fs::temp_directory_path();
    const fs::path hex = tmp / "ccm_cli_hex.json";
    std::ofstream(hex) << support::cycle_graph(6).to_json_string() << "\n";

    const fs::path out = tmp / "ccm_cli_hex_lifted.json";
    const auto r = run_cli("lift --in " + hex.string() + " --mode cellular --max-cycle-len 6 --out " +
                           out.string());
    CHECK(r.exit_code == 0);
    const json summary = json::parse(r.out);
    CHECK(summary["r0"] == 6);
    CHECK(summary["r1"] == 6);
    CHECK(summary["r2"] == 1);
    CHECK(ccm::CombinatorialComplex::load(out.string()).cell_count(2) == 1);

    const fs::path tri = tmp / "ccm_cli_tri.json";
    std::ofstream(tri) << support::triangle_graph().to_json_string() << "\n";
    const auto r2 = run_cli("lift --in " + tri.string() + " --mode simplicial");
    CHECK(r2.exit_code == 0);
    const json s2 = json::parse(r2.out);
    CHECK(s2["r0"] == 3);
    CHECK(s2["r1"] == 3);
    CHECK(s2["r2"] == 1);

    // identical inputs give byte-identical outputs
    const fs::path out2 = tmp / "ccm_cli_hex_lifted2.json";
    const auto r3 = run_cli("lift --in " + hex.string() +
                            " --mode cellular --max-cycle-len 6 --out " + out2.string());
    CHECK(r3.exit_code == 0);
    CHECK(slurp(out) == slurp(out2));
    CHECK(r.out == r3.out);
}

TEST_CASE("malformed input yields a machine-readable error and exit 2") {
    const fs::path bad = fs::temp_directory_path() / "ccm_cli_bad.json";
    std::ofstream(bad) << "{ \"vertex_count\": 3, \n broken\n";
    const auto r = run_cli("lift --in " + bad.string() + " --mode graph");
    CHECK(r.exit_code == 2);
    const json err = json::parse(r.err);
    CHECK(err["error"] == "ParseError");
    // nlohmann includes the line in its diagnostics
    CHECK(err["message"].get<std::string>().find("line") != std::string::npos);
}

TEST_CASE("ccwl command distinguishes cellular lifts but not plain graphs") {
    const fs::path tmp = fs::temp_directory_path();
    const fs::path a_cell = tmp / "ccm_cli_a_cell.json";
    const fs::path b_cell = tmp / "ccm_cli_b_cell.json";
    ccm::lift_cellular(support::cycle_graph(6), 6).save(a_cell.string());
    ccm::lift_cellular(support::two_triangles_graph(), 6).save(b_cell.string());
    const auto r = run_cli("ccwl --a " + a_cell.string() + " --b " + b_cell.string());
    CHECK(r.exit_code == 0);
    CHECK(json::parse(r.out)["result"] == "distinguished");

    const fs::path a_graph = tmp / "ccm_cli_a_graph.json";
    const fs::path b_graph = tmp / "ccm_cli_b_graph.json";
    ccm::lift_identity(support::cycle_graph(6)).save(a_graph.string());
    ccm::lift_identity(support::two_triangles_graph()).save(b_graph.string());
    const auto r2 = run_cli("ccwl --a " + a_graph.string() + " --b " + b_graph.string());
    CHECK(r2.exit_code == 0);
    CHECK(json::parse(r2.out)["result"] == "indistinguishable");

    // a complex against a relabeled copy of itself
    const fs::path self = tmp / "ccm_cli_self.json";
    ccm::relabel(ccm::lift_cellular(support::cycle_graph(6), 6), {3, 4, 5, 0, 1, 2})
        .save(self.string());
    const auto r3 = run_cli("ccwl --a " + a_cell.string() + " --b " + self.string());
    CHECK(json::parse(r3.out)["result"] == "indistinguishable");
}

TEST_CASE("train writes metrics and reruns byte-identically") {
    const fs::path dataset = write_toy_dataset();
    const fs::path out1 = fresh_dir("ccm_cli_run1");
    const fs::path out2 = fresh_dir("ccm_cli_run2");
    const fs::path cfg = write_config(dataset, out1);

    const auto r1 = run_cli("train --config " + cfg.string());
    CHECK(r1.exit_code == 0);
    REQUIRE(fs::exists(out1 / "metrics.json"));
    const json metrics = json::parse(slurp(out1 / "metrics.json"));
    CHECK(metrics["epochs"] == 8);
    CHECK(metrics["train_loss"].size() == 8);

    const auto r2 = run_cli("train --config " + cfg.string() + " --out " + out2.string());
    CHECK(r2.exit_code == 0);
    CHECK(slurp(out1 / "metrics.json") == slurp(out2 / "metrics.json"));
    CHECK(slurp(out1 / "model.ckpt") == slurp(out2 / "model.ckpt"));

    // eval reads the checkpoint back
    const auto r3 = run_cli("eval --config " + cfg.string() + " --checkpoint " +
                            (out1 / "model.ckpt").string() + " --split test");
    CHECK(r3.exit_code == 0);
    const json eval_out = json::parse(r3.out);
    CHECK(eval_out["n"] == 6);
    CHECK(eval_out["accuracy"].get<double>() >= 0.0);
}

TEST_CASE("node-level dataset with a features file trains end to end") {
    const fs::path dir = fresh_dir("ccm_cli_node_dataset");
    fs::create_directories(dir / "graphs");
    std::ofstream(dir / "graphs" / "g0.json")
        << ccm::Graph::make(6, {{0, 1}, {0, 2}, {0, 3}, {0, 4}, {0, 5}}).to_json_string()
        << "\n";
    {
        std::ofstream feats(dir / "features.csv");
        feats << "complex_id,node_id,f1,f2\n";  // header line is skipped
        for (int v = 0; v < 6; ++v)
            feats << "0," << v << "," << (v == 0 ? 1.0 : 0.25) << ",-0.5\n";
    }
    {
        std::ofstream labels(dir / "labels.csv");
        for (int v = 0; v < 6; ++v) labels << "0," << v << "," << (v == 0 ? 1 : 0) << "\n";
    }
    std::ofstream(dir / "splits.json")
        << R"({"train":[0,1,2,3],"val":[0,4],"test":[0,5]})" << "\n";

    const fs::path out = fresh_dir("ccm_cli_node_out");
    const fs::path cfg_path = fs::temp_directory_path() / "ccm_cli_node_config.json";
    json cfg = {{"dataset", dir.string()}, {"out", out.string()},
                {"task", "node"},          {"lifting", "graph"},
                {"hidden", 8},             {"layers", 1},
                {"state_dim", 4},          {"expand", 2},
                {"dropout", 0.0},          {"lr", 0.02},
                {"epochs", 30},            {"seed", 1}};
    std::ofstream(cfg_path) << cfg.dump() << "\n";

    const auto r = run_cli("train --config " + cfg_path.string());
    CHECK(r.exit_code == 0);
    const json summary = json::parse(r.out);
    CHECK(summary["test_acc"].get<double>() == doctest::Approx(1.0));

    const auto r2 = run_cli("eval --config " + cfg_path.string() + " --checkpoint " +
                            (out / "model.ckpt").string() + " --split val");
    CHECK(r2.exit_code == 0);
    CHECK(json::parse(r2.out)["accuracy"].get<double>() == doctest::Approx(1.0));
}

TEST_CASE("missing dataset path exits with code 2") {
    const fs::path cfg = fs::temp_directory_path() / "ccm_cli_missing.json";
    std::ofstream(cfg) << R"({"dataset":"/nonexistent/ccm_nowhere","epochs":1})" << "\n";
    const auto r = run_cli("train --config " + cfg.string());
    CHECK(r.exit_code == 2);
    const json err = json::parse(r.err);
    CHECK(err["error"] == "IoError");
}

TEST_CASE("unknown config keys exit with code 3") {
    const fs::path cfg = fs::temp_directory_path() / "ccm_cli_unknown.json";
    std::ofstream(cfg) << R"({"dataset":"x","learning_rate":0.1})" << "\n";
    const auto r = run_cli("train --config " + cfg.string());
    CHECK(r.exit_code == 3);
    CHECK(json::parse(r.err)["error"] == "ConfigError");
}

TEST_CASE("expressivity command handles corpora") {
    const fs::path empty = fresh_dir("ccm_cli_corpus_empty");
    const auto r = run_cli("expressivity --corpus " + empty.string() + " --seeds 0,1");
    CHECK(r.exit_code == 0);
    CHECK(json::parse(r.out)["pairs"].empty());

    const fs::path corpus = fresh_dir("ccm_cli_corpus");
    ccm::lift_cellular(support::cycle_graph(6), 6).save((corpus / "pair0_a.json").string());
    ccm::lift_cellular(support::two_triangles_graph(), 6)
        .save((corpus / "pair0_b.json").string());
    // isomorphic pair over a refinement-discrete complex: the scan order is
    // fully canonical, so the readouts must coincide
    const auto iso = ccm::lift_simplicial(
        ccm::Graph::make(6, {{0, 1}, {0, 2}, {1, 2}, {1, 3}, {2, 4}, {4, 5}}));
    REQUIRE(ccm::canonical_stable_colors(iso, ccm::init_colors(iso).colors)
                .all_singleton_classes(iso));
    iso.save((corpus / "pair1_a.json").string());
    ccm::relabel(iso, {5, 2, 0, 4, 1, 3}).save((corpus / "pair1_b.json").string());

    const auto r2 = run_cli("expressivity --corpus " + corpus.string() +
                            " --seeds 0,3 --hidden 12 --state-dim 4");
    CHECK(r2.exit_code == 0);
    const json report = json::parse(r2.out);
    CHECK(report["counterexamples"].empty());
    bool saw_distinguished = false;
    for (const auto& p : report["pairs"]) {
        if (p["name"] == "pair0") {
            CHECK(p["ccwl_distinguishes"] == true);
            saw_distinguished = true;
        }
        if (p["name"] == "pair1") CHECK(p["model_differs"] == false);
    }
    CHECK(saw_distinguished);
}

TEST_CASE("bench reports linear scaling") {
    const auto r = run_cli("bench --lengths 64,128,256,512 --width 8 --state-dim 8");
    CHECK(r.exit_code == 0);
    const json out = json::parse(r.out);
    CHECK(out["r2"].get<double>() > 0.99);
    for (const auto& ratio : out["doubling_ratios"]) {
        CHECK(ratio.get<double>() > 1.9);
        CHECK(ratio.get<double>() < 2.1);
    }
    // repeated length: identical op counts
    const auto r2 = run_cli("bench --lengths 128,128 --width 8 --state-dim 8");
    const json out2 = json::parse(r2.out);
    CHECK(out2["rows"][0]["ops"] == out2["rows"][1]["ops"]);
}
