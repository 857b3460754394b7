#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ccm/ccwl.hpp"
#include "ccm/kernels.hpp"
#include "ccm/lifting.hpp"
#include "ccm/model.hpp"
#include "ccm/ssm.hpp"
#include "ccm/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void emit(const json& j, bool pretty) { std::cout << j.dump(pretty ? 2 : -1) << "\n"; }

struct TrainSetup {
    ccm::ModelConfig cfg;
    std::string dataset;
    std::string out = ".";
};

TrainSetup parse_train_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ccm::IoError("cannot open config: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw ccm::ParseError(std::string("config: ") + e.what());
    }
    static const std::vector<std::string> known = {
        "dataset", "out", "task", "lifting", "max_cycle_len", "hidden", "layers",
        "state_dim", "expand", "dropout", "bidirectional", "readout", "lr",
        "epochs", "batch_size", "seed"};
    for (const auto& [key, value] : j.items())
        if (std::find(known.begin(), known.end(), key) == known.end())
            throw ccm::ConfigError("unknown config key: " + key);

    TrainSetup setup;
    if (!j.contains("dataset")) throw ccm::ConfigError("config requires \"dataset\"");
    setup.dataset = j.at("dataset").get<std::string>();
    setup.out = j.value("out", std::string("."));
    ccm::ModelConfig& cfg = setup.cfg;
    cfg.task = j.value("task", cfg.task);
    cfg.lifting = j.value("lifting", cfg.lifting);
    cfg.max_cycle_len = j.value("max_cycle_len", cfg.max_cycle_len);
    cfg.hidden = j.value("hidden", cfg.hidden);
    cfg.layers = j.value("layers", cfg.layers);
    cfg.state_dim = j.value("state_dim", cfg.state_dim);
    cfg.expand = j.value("expand", cfg.expand);
    cfg.dropout = j.value("dropout", cfg.dropout);
    cfg.bidirectional = j.value("bidirectional", cfg.bidirectional);
    cfg.readout = j.value("readout", cfg.task == "node" ? std::string("node")
                                                        : std::string("graph"));
    cfg.lr = j.value("lr", cfg.lr);
    cfg.epochs = j.value("epochs", cfg.epochs);
    cfg.batch_size = j.value("batch_size", cfg.batch_size);
    cfg.seed = j.value("seed", cfg.seed);
    return setup;
}

std::vector<std::pair<std::string, ccm::Tensor>> named_params(const ccm::ModelParams& p) {
    std::vector<std::pair<std::string, ccm::Tensor>> out;
    p.visit([&out](const std::string& name, const ccm::Tensor& t) {
        out.emplace_back(name, t);
    });
    return out;
}

void load_checkpoint(ccm::ModelParams& params, const std::string& path) {
    const auto stored = ccm::load_tensors(path);
    params.visit([&stored, &path](const std::string& name, ccm::Tensor& t) {
        const auto it = stored.find(name);
        if (it == stored.end())
            throw ccm::ParseError("checkpoint " + path + " is missing tensor " + name);
        if (it->second.shape != t.shape)
            throw ccm::ParseError("checkpoint tensor " + name + " has the wrong shape");
        t = it->second;
    });
}

json summary_json(const ccm::CombinatorialComplex& cc) {
    return {{"r0", cc.cell_count(0)}, {"r1", cc.cell_count(1)}, {"r2", cc.cell_count(2)}};
}

int cmd_lift(const std::string& in_path, const std::string& mode, int max_cycle_len,
             const std::string& out_path, bool pretty) {
    const ccm::Graph g = ccm::Graph::load(in_path);
    const ccm::CombinatorialComplex cc =
        ccm::lift(g, ccm::parse_lift_mode(mode), max_cycle_len);
    // complex files stay compact regardless of --pretty: they are
    // byte-stable artifacts, the flag only affects the summary
    if (!out_path.empty()) cc.save(out_path, false);
    emit(summary_json(cc), pretty);
    return 0;
}

int cmd_train(const std::string& config_path, bool pretty, const std::string& seed_override,
              const std::string& out_override) {
    TrainSetup setup = parse_train_config(config_path);
    if (!seed_override.empty()) setup.cfg.seed = std::stoull(seed_override);
    if (!out_override.empty()) setup.out = out_override;

    ccm::LabeledDataset ds = ccm::load_dataset(setup.dataset, setup.cfg);
    setup.cfg.input_dim = ds.input_dim;
    setup.cfg.num_classes = ds.num_classes;
    if (setup.cfg.readout.empty())
        setup.cfg.readout = setup.cfg.task == "node" ? "node" : "graph";
    setup.cfg.validate();

    ccm::Model model = ccm::Model::make(setup.cfg);
    const ccm::TrainResult result = ccm::train(model, ds);

    fs::create_directories(setup.out);
    const std::string metrics_path = (fs::path(setup.out) / "metrics.json").string();
    const std::string ckpt_path = (fs::path(setup.out) / "model.ckpt").string();
    json metrics = {{"epochs", setup.cfg.epochs},
                    {"train_loss", result.train_loss},
                    {"train_acc", result.train_acc},
                    {"val_acc", result.val_acc},
                    {"best_epoch", result.best_epoch},
                    {"best_val_acc", result.best_val_acc},
                    {"test_acc", result.test_acc}};
    std::ofstream mf(metrics_path);
    if (!mf) throw ccm::IoError("cannot write " + metrics_path);
    mf << metrics.dump() << "\n";
    ccm::save_tensors(ckpt_path, named_params(model.params()));

    emit(json{{"best_epoch", result.best_epoch},
              {"best_val_acc", result.best_val_acc},
              {"test_acc", result.test_acc},
              {"metrics", metrics_path},
              {"checkpoint", ckpt_path}},
         pretty);
    return 0;
}

int cmd_eval(const std::string& config_path, const std::string& ckpt_path,
             const std::string& split, bool pretty) {
    TrainSetup setup = parse_train_config(config_path);
    ccm::LabeledDataset ds = ccm::load_dataset(setup.dataset, setup.cfg);
    setup.cfg.input_dim = ds.input_dim;
    setup.cfg.num_classes = ds.num_classes;
    setup.cfg.validate();
    ccm::Model model = ccm::Model::make(setup.cfg);
    load_checkpoint(model.params(), ckpt_path);
    const std::vector<int>& mask = split == "train" ? ds.splits.train
                                   : split == "val" ? ds.splits.val
                                                    : ds.splits.test;
    if (split != "train" && split != "val" && split != "test")
        throw ccm::ConfigError("split must be train, val or test");
    const double acc = ccm::evaluate(model, ds, mask);
    emit(json{{"accuracy", acc}, {"split", split}, {"n", mask.size()}}, pretty);
    return 0;
}

int cmd_ccwl(const std::string& a_path, const std::string& b_path, bool pretty) {
    const auto a = ccm::CombinatorialComplex::load(a_path);
    const auto b = ccm::CombinatorialComplex::load(b_path);
    const ccm::DistinguishResult r = ccm::distinguish(a, b);
    emit(json{{"result", r.distinguished ? "distinguished" : "indistinguishable"},
              {"iteration", r.iteration},
              {"classes_a", r.classes_a},
              {"classes_b", r.classes_b}},
         pretty);
    return 0;
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
    std::vector<std::uint64_t> seeds;
    std::string token;
    std::istringstream is(text);
    while (std::getline(is, token, ','))
        if (!token.empty()) seeds.push_back(std::stoull(token));
    if (seeds.empty()) throw ccm::InvalidParameter("empty seed list");
    return seeds;
}

int cmd_expressivity(const std::string& corpus, const std::string& seeds_text,
                     double tolerance, int hidden, int layers, int state_dim, bool pretty) {
    if (!fs::is_directory(corpus)) throw ccm::IoError("corpus directory not found: " + corpus);
    std::vector<std::string> names;
    for (const auto& entry : fs::directory_iterator(corpus)) {
        const std::string fname = entry.path().filename().string();
        const std::string suffix = "_a.json";
        if (fname.size() > suffix.size() &&
            fname.compare(fname.size() - suffix.size(), suffix.size(), suffix) == 0)
            names.push_back(fname.substr(0, fname.size() - suffix.size()));
    }
    std::sort(names.begin(), names.end());
    const std::vector<std::uint64_t> seeds = parse_seed_list(seeds_text);

    ccm::ModelConfig cfg;
    cfg.hidden = hidden;
    cfg.layers = layers;
    cfg.state_dim = state_dim;
    cfg.expand = 2;
    cfg.dropout = 0.0;
    cfg.input_dim = 1;
    cfg.num_classes = 2;
    cfg.task = "graph";
    cfg.readout = "graph";

    // untrained models, one per seed, shared read-only across pairs
    std::vector<ccm::Model> models;
    for (std::uint64_t seed : seeds) {
        ccm::ModelConfig seeded = cfg;
        seeded.seed = seed;
        models.push_back(ccm::Model::make(seeded));
    }

    struct PairReport {
        std::string name;
        std::uint64_t seed;
        bool model_differs;
        bool ccwl_distinguishes;
        double diff;
    };
    std::vector<PairReport> reports(names.size() * seeds.size());
    std::exception_ptr failure;

#pragma omp parallel for schedule(dynamic)
    for (long long pi = 0; pi < static_cast<long long>(names.size()); ++pi) {
        try {
            const std::string& name = names[static_cast<std::size_t>(pi)];
            const auto a = ccm::CombinatorialComplex::load(
                (fs::path(corpus) / (name + "_a.json")).string());
            const auto b = ccm::CombinatorialComplex::load(
                (fs::path(corpus) / (name + "_b.json")).string());
            const bool ccwl_flag = ccm::distinguish(a, b).distinguished;
            const ccm::Tensor fa = ccm::Tensor::full({a.cell_count(0), 1}, 1.0);
            const ccm::Tensor fb = ccm::Tensor::full({b.cell_count(0), 1}, 1.0);
            const ccm::CellOrder oa = ccm::canonical_cell_order(a, fa);
            const ccm::CellOrder ob = ccm::canonical_cell_order(b, fb);
            for (std::size_t si = 0; si < seeds.size(); ++si) {
                const ccm::Model& model = models[si];
                ccm::ForwardOpts opts;
                const ccm::Tensor ra =
                    model.graph_embedding(a, fa, oa, model.params(), opts);
                const ccm::Tensor rb =
                    model.graph_embedding(b, fb, ob, model.params(), opts);
                double diff = 0.0;
                for (std::size_t i = 0; i < ra.size(); ++i)
                    diff = std::max(diff, std::fabs(ra.at(i) - rb.at(i)));
                reports[static_cast<std::size_t>(pi) * seeds.size() + si] =
                    PairReport{name, seeds[si], diff > tolerance, ccwl_flag, diff};
            }
        } catch (...) {
#pragma omp critical
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);

    json pairs = json::array();
    json counterexamples = json::array();
    for (const auto& r : reports) {
        pairs.push_back({{"name", r.name},
                         {"seed", r.seed},
                         {"model_differs", r.model_differs},
                         {"ccwl_distinguishes", r.ccwl_distinguishes},
                         {"max_diff", r.diff}});
        if (r.model_differs && !r.ccwl_distinguishes)
            counterexamples.push_back({{"name", r.name}, {"seed", r.seed}});
    }
    emit(json{{"pairs", pairs},
              {"counterexamples", counterexamples},
              {"tolerance", tolerance}},
         pretty);
    return 0;
}

int cmd_bench(const std::string& lengths_text, int width, int state_dim, bool pretty) {
    std::vector<std::size_t> lengths;
    std::string token;
    std::istringstream is(lengths_text);
    while (std::getline(is, token, ','))
        if (!token.empty()) lengths.push_back(std::stoull(token));
    if (lengths.size() < 2) throw ccm::InvalidParameter("bench needs at least 2 lengths");

    const auto d = static_cast<std::size_t>(width);
    const auto n = static_cast<std::size_t>(state_dim);
    ccm::Rng rng(0);
    const ccm::SsmParams params = ccm::SsmParams::init(d, n, rng);

    json rows = json::array();
    std::vector<double> xs, ys;
    for (std::size_t t_len : lengths) {
        ccm::Tensor h = ccm::Tensor::zeros({t_len, d});
        ccm::Rng data_rng(t_len);
        for (double& v : *h.data) v = data_rng.uniform(-1.0, 1.0);
        ccm::selective_scan(h, ccm::selective_params(h, params));  // warmup
        ccm::kernels::reset_op_count();
        const auto start = std::chrono::steady_clock::now();
        ccm::selective_scan(h, ccm::selective_params(h, params));
        const auto stop = std::chrono::steady_clock::now();
        const auto ops = ccm::kernels::op_count();
        const double seconds = std::chrono::duration<double>(stop - start).count();
        rows.push_back({{"T", t_len}, {"ops", ops}, {"seconds", seconds}});
        xs.push_back(static_cast<double>(t_len));
        ys.push_back(static_cast<double>(ops));
    }

    // least-squares line ops ~ a + b T
    const double m = static_cast<double>(xs.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
    }
    const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    const double intercept = (sy - slope * sx) / m;
    double ss_res = 0, ss_tot = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double fit = intercept + slope * xs[i];
        ss_res += (ys[i] - fit) * (ys[i] - fit);
        ss_tot += (ys[i] - sy / m) * (ys[i] - sy / m);
    }
    const double r2 = ss_tot == 0.0 ? 1.0 : 1.0 - ss_res / ss_tot;

    json ratios = json::array();
    for (std::size_t i = 1; i < ys.size(); ++i) ratios.push_back(ys[i] / ys[i - 1]);

    emit(json{{"rows", rows}, {"r2", r2}, {"doubling_ratios", ratios}}, pretty);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    if (const char* env = std::getenv("CCM_THREADS"))
        ccm::kernels::configure_threads(std::atoi(env));

    CLI::App app{"CCMamba: selective state-space message passing on combinatorial complexes"};
    app.require_subcommand(1);
    app.fallthrough();  // global flags remain valid after the subcommand name
    bool pretty = false;
    std::string seed_override, out_override, config_path;
    app.add_flag("--pretty", pretty, "human-readable JSON output");
    app.add_option("--seed", seed_override, "seed override");
    app.add_option("--out", out_override, "output path override");
    app.add_option("--config", config_path, "config file path");

    auto* lift_cmd = app.add_subcommand("lift", "lift a graph into a complex");
    std::string lift_in, lift_mode = "graph", lift_out;
    int max_cycle_len = 6;
    lift_cmd->add_option("--in", lift_in, "graph json")->required();
    lift_cmd->add_option("--mode", lift_mode, "graph|hypergraph|simplicial|cellular");
    lift_cmd->add_option("--max-cycle-len", max_cycle_len, "cellular cycle bound");
    lift_cmd->add_option("--out", lift_out, "output complex json");

    auto* train_cmd = app.add_subcommand("train", "train a model from a config");
    std::string train_config;
    train_cmd->add_option("--config", train_config, "config json")->required();

    auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
    std::string eval_config, eval_ckpt, eval_split = "test";
    eval_cmd->add_option("--config", eval_config, "config json")->required();
    eval_cmd->add_option("--checkpoint", eval_ckpt, "checkpoint path")->required();
    eval_cmd->add_option("--split", eval_split, "train|val|test");

    auto* ccwl_cmd = app.add_subcommand("ccwl", "refinement-based non-isomorphism test");
    std::string ccwl_a, ccwl_b;
    ccwl_cmd->add_option("--a", ccwl_a, "first complex json")->required();
    ccwl_cmd->add_option("--b", ccwl_b, "second complex json")->required();

    auto* expr_cmd = app.add_subcommand("expressivity", "readout-vs-refinement sweep");
    std::string corpus, seeds = "0,3,5,7,9";
    double tolerance = 1e-6;
    int expr_hidden = 32, expr_layers = 2, expr_state = 8;
    expr_cmd->add_option("--corpus", corpus, "directory of <name>_a.json/<name>_b.json pairs")
        ->required();
    expr_cmd->add_option("--seeds", seeds, "comma-separated weight seeds");
    expr_cmd->add_option("--tolerance", tolerance, "readout difference threshold");
    expr_cmd->add_option("--hidden", expr_hidden, "hidden width");
    expr_cmd->add_option("--layers", expr_layers, "layer count");
    expr_cmd->add_option("--state-dim", expr_state, "state dimension");

    auto* bench_cmd = app.add_subcommand("bench", "selective-scan scaling measurements");
    std::string lengths = "64,128,256,512";
    int bench_width = 16, bench_state = 16;
    bench_cmd->add_option("--lengths", lengths, "comma-separated sequence lengths");
    bench_cmd->add_option("--width", bench_width, "channel count");
    bench_cmd->add_option("--state-dim", bench_state, "state dimension");

    CLI11_PARSE(app, argc, argv);

    try {
        if (lift_cmd->parsed())
            return cmd_lift(lift_in, lift_mode, max_cycle_len,
                            lift_out.empty() ? out_override : lift_out, pretty);
        if (train_cmd->parsed())
            return cmd_train(train_config.empty() ? config_path : train_config, pretty,
                             seed_override, out_override);
        if (eval_cmd->parsed()) return cmd_eval(eval_config, eval_ckpt, eval_split, pretty);
        if (ccwl_cmd->parsed()) return cmd_ccwl(ccwl_a, ccwl_b, pretty);
        if (expr_cmd->parsed())
            return cmd_expressivity(corpus, seeds, tolerance, expr_hidden, expr_layers,
                                    expr_state, pretty);
        if (bench_cmd->parsed())
            return cmd_bench(lengths, bench_width, bench_state, pretty);
    } catch (const ccm::Error& e) {
        nlohmann::json err = {{"error", e.kind()}, {"message", e.what()}};
        std::cerr << err.dump() << "\n";
        switch (e.category()) {
            case ccm::Error::Category::BadInput: return 2;
            case ccm::Error::Category::Config: return 3;
            case ccm::Error::Category::Internal: return 1;
        }
        return 1;
    } catch (const std::exception& e) {
        nlohmann::json err = {{"error", "Internal"}, {"message", e.what()}};
        std::cerr << err.dump() << "\n";
        return 1;
    }
    return 0;
}
