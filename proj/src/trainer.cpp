#include "ccm/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "ccm/kernels.hpp"
#include "ccm/lifting.hpp"

namespace fs = std::filesystem;

namespace ccm {

Tensor cross_entropy(const Tensor& logits, const std::vector<int>& labels) {
    const std::size_t n = logits.rows(), c = logits.cols();
    if (labels.size() != n)
        throw ShapeMismatch("cross_entropy: " + std::to_string(labels.size()) +
                            " labels for " + std::to_string(n) + " rows");
    if (n == 0) throw ShapeMismatch("cross_entropy: empty batch");
    for (int y : labels)
        if (y < 0 || static_cast<std::size_t>(y) >= c)
            throw InvalidLabel("label " + std::to_string(y) + " outside [0," +
                               std::to_string(c) + ")");

    auto probs = std::make_shared<std::vector<double>>(n * c);
    double total = 0.0;
    kernels::add_ops(4 * n * c);
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = logits.ptr() + i * c;
        double mx = row[0];
        for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, row[j]);
        double sum = 0.0;
        for (std::size_t j = 0; j < c; ++j) {
            const double e = std::exp(row[j] - mx);
            (*probs)[i * c + j] = e;
            sum += e;
        }
        for (std::size_t j = 0; j < c; ++j) (*probs)[i * c + j] /= sum;
        total += std::log(sum) + mx - row[static_cast<std::size_t>(labels[i])];
    }

    Tensor out = Tensor::scalar(total / static_cast<double>(n));
    Tape* tape = logits.differentiable() ? logits.tape : nullptr;
    if (tape) {
        auto lab = std::make_shared<std::vector<int>>(labels);
        out.tape = tape;
        out.node = tape->record(
            1, {logits.node},
            [n, c, probs, lab](const double* g, const std::vector<double*>& pg) {
                if (!pg[0]) return;
                kernels::add_ops(3 * n * c);
                const double scale = g[0] / static_cast<double>(n);
                for (std::size_t i = 0; i < n; ++i)
                    for (std::size_t j = 0; j < c; ++j) {
                        const double onehot =
                            j == static_cast<std::size_t>((*lab)[i]) ? 1.0 : 0.0;
                        pg[0][i * c + j] += scale * ((*probs)[i * c + j] - onehot);
                    }
            });
    }
    return out;
}

void Adam::step(ModelParams& params, const ModelParams& bound, const Tape& tape) {
    ++step_;
    const double bc1 = 1.0 - std::pow(beta1_, step_);
    const double bc2 = 1.0 - std::pow(beta2_, step_);

    std::vector<std::pair<std::string, Tensor*>> targets;
    params.visit([&](const std::string& name, Tensor& t) { targets.emplace_back(name, &t); });
    std::vector<std::pair<std::string, const Tensor*>> sources;
    bound.visit([&](const std::string& name, const Tensor& t) { sources.emplace_back(name, &t); });
    if (targets.size() != sources.size())
        throw ShapeMismatch("optimizer: parameter sets differ");

    for (std::size_t i = 0; i < targets.size(); ++i) {
        auto& [name, param] = targets[i];
        const Tensor* grad_holder = sources[i].second;
        if (param->size() != grad_holder->size())
            throw ShapeMismatch("optimizer: shape mismatch for " + name);
        const Tensor g = tape.grad(*grad_holder);
        auto& [m, v] = moments_[name];
        if (m.empty()) {
            m.assign(param->size(), 0.0);
            v.assign(param->size(), 0.0);
        }
        kernels::add_ops(10 * param->size());
        for (std::size_t j = 0; j < param->size(); ++j) {
            const double gj = g.at(j);
            m[j] = beta1_ * m[j] + (1.0 - beta1_) * gj;
            v[j] = beta2_ * v[j] + (1.0 - beta2_) * gj * gj;
            const double mhat = m[j] / bc1;
            const double vhat = v[j] / bc2;
            (*param->data)[j] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
        }
    }
}

void LabeledDataset::validate() const {
    if (task != "graph" && task != "node")
        throw ConfigError("dataset task must be graph or node");
    if (samples.empty()) throw EmptySplit("dataset has no samples");
    if (task == "node" && samples.size() != 1)
        throw ConfigError("node-level datasets hold exactly one complex");
    const std::size_t label_domain =
        task == "graph" ? samples.size() : samples[0].cc.cell_count(0);
    if (labels.size() != label_domain)
        throw ConfigError("label count " + std::to_string(labels.size()) +
                          " does not match " + std::to_string(label_domain));
    for (int y : labels)
        if (y < 0 || y >= num_classes) throw InvalidLabel("label " + std::to_string(y));
    auto check_mask = [&](const std::vector<int>& mask) {
        for (int i : mask)
            if (i < 0 || static_cast<std::size_t>(i) >= label_domain)
                throw IndexOutOfRange("split index " + std::to_string(i));
    };
    check_mask(splits.train);
    check_mask(splits.val);
    check_mask(splits.test);
}

SplitMasks stratified_split(const std::vector<int>& labels, std::uint64_t seed,
                            double train_frac, double val_frac) {
    std::map<int, std::vector<int>> by_class;
    for (std::size_t i = 0; i < labels.size(); ++i)
        by_class[labels[i]].push_back(static_cast<int>(i));
    Rng rng(seed);
    SplitMasks masks;
    for (auto& [cls, members] : by_class) {
        rng.shuffle(members);
        const std::size_t n = members.size();
        const std::size_t n_train = static_cast<std::size_t>(train_frac * n);
        const std::size_t n_val = static_cast<std::size_t>(val_frac * n);
        for (std::size_t i = 0; i < n; ++i) {
            if (i < n_train)
                masks.train.push_back(members[i]);
            else if (i < n_train + n_val)
                masks.val.push_back(members[i]);
            else
                masks.test.push_back(members[i]);
        }
    }
    std::sort(masks.train.begin(), masks.train.end());
    std::sort(masks.val.begin(), masks.val.end());
    std::sort(masks.test.begin(), masks.test.end());
    return masks;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream is(line);
    while (std::getline(is, field, ',')) fields.push_back(field);
    return fields;
}

bool numeric_field(const std::string& s) {
    if (s.empty()) return false;
    char* end = nullptr;
    std::strtod(s.c_str(), &end);
    return end != s.c_str() && *end == '\0';
}

std::vector<std::vector<std::string>> read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open: " + path);
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto fields = split_csv_line(line);
        if (!numeric_field(fields[0])) continue;  // header
        rows.push_back(std::move(fields));
    }
    return rows;
}

}  // namespace

LabeledDataset load_dataset(const std::string& dir, const ModelConfig& cfg) {
    const fs::path root(dir);
    if (!fs::is_directory(root)) throw IoError("dataset directory not found: " + dir);
    const fs::path graph_dir = root / "graphs";
    if (!fs::is_directory(graph_dir))
        throw IoError("dataset is missing graphs/: " + graph_dir.string());

    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(graph_dir))
        if (entry.path().extension() == ".json") files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    if (files.empty()) throw IoError("no graph files in " + graph_dir.string());

    LabeledDataset ds;
    ds.task = cfg.task;
    const LiftMode mode = parse_lift_mode(cfg.lifting);
    for (const auto& file : files) {
        std::ifstream in(file);
        std::stringstream buf;
        buf << in.rdbuf();
        const std::string text = buf.str();
        CombinatorialComplex cc = text.find("\"cells\"") != std::string::npos
                                      ? CombinatorialComplex::from_json_string(text)
                                      : lift(Graph::from_json_string(text), mode,
                                             cfg.max_cycle_len);
        ds.samples.push_back(Sample{std::move(cc), Tensor{}, CellOrder{}});
    }

    // Features: default to a constant 1 when no file is present.
    const fs::path feat_path = root / "features.csv";
    if (fs::exists(feat_path)) {
        const auto rows = read_csv(feat_path.string());
        if (rows.empty()) throw ParseError("features.csv has no data rows");
        const int f_dim = static_cast<int>(rows[0].size()) - 2;
        if (f_dim < 1) throw ParseError("features.csv rows need complex_id,node_id,f1..");
        ds.input_dim = f_dim;
        for (auto& sample : ds.samples)
            sample.features = Tensor::zeros(
                {sample.cc.cell_count(0), static_cast<std::size_t>(f_dim)});
        for (const auto& row : rows) {
            if (static_cast<int>(row.size()) - 2 != f_dim)
                throw ParseError("features.csv has ragged rows");
            const int cid = std::stoi(row[0]);
            const int nid = std::stoi(row[1]);
            if (cid < 0 || static_cast<std::size_t>(cid) >= ds.samples.size())
                throw IndexOutOfRange("features.csv complex_id " + std::to_string(cid));
            Tensor& feat = ds.samples[static_cast<std::size_t>(cid)].features;
            if (nid < 0 || static_cast<std::size_t>(nid) >= feat.rows())
                throw IndexOutOfRange("features.csv node_id " + std::to_string(nid));
            for (int j = 0; j < f_dim; ++j)
                (*feat.data)[static_cast<std::size_t>(nid) * static_cast<std::size_t>(f_dim) +
                             static_cast<std::size_t>(j)] =
                    std::stod(row[static_cast<std::size_t>(j + 2)]);
        }
    } else {
        ds.input_dim = 1;
        for (auto& sample : ds.samples)
            sample.features = Tensor::full({sample.cc.cell_count(0), 1}, 1.0);
    }

    for (auto& sample : ds.samples)
        sample.order = canonical_cell_order(sample.cc, sample.features);

    // Labels.
    const fs::path label_path = root / "labels.csv";
    const auto label_rows = read_csv(label_path.string());
    if (label_rows.empty()) throw ParseError("labels.csv has no data rows");
    if (ds.task == "graph") {
        ds.labels.assign(ds.samples.size(), -1);
        for (const auto& row : label_rows) {
            if (row.size() != 2) throw ParseError("graph labels.csv rows are complex_id,label");
            const int cid = std::stoi(row[0]);
            if (cid < 0 || static_cast<std::size_t>(cid) >= ds.samples.size())
                throw IndexOutOfRange("labels.csv complex_id " + std::to_string(cid));
            ds.labels[static_cast<std::size_t>(cid)] = std::stoi(row[1]);
        }
        for (int y : ds.labels)
            if (y < 0) throw ParseError("labels.csv does not label every complex");
    } else {
        if (ds.samples.size() != 1)
            throw ConfigError("node task requires exactly one complex, found " +
                              std::to_string(ds.samples.size()));
        ds.labels.assign(ds.samples[0].cc.cell_count(0), -1);
        for (const auto& row : label_rows) {
            if (row.size() != 3)
                throw ParseError("node labels.csv rows are complex_id,node_id,label");
            const int nid = std::stoi(row[1]);
            if (nid < 0 || static_cast<std::size_t>(nid) >= ds.labels.size())
                throw IndexOutOfRange("labels.csv node_id " + std::to_string(nid));
            ds.labels[static_cast<std::size_t>(nid)] = std::stoi(row[2]);
        }
        for (int y : ds.labels)
            if (y < 0) throw ParseError("labels.csv does not label every node");
    }
    ds.num_classes = 1 + *std::max_element(ds.labels.begin(), ds.labels.end());
    if (ds.num_classes < 2) ds.num_classes = 2;

    // Splits.
    const fs::path split_path = root / "splits.json";
    if (fs::exists(split_path)) {
        std::ifstream in(split_path);
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError(std::string("splits.json: ") + e.what());
        }
        ds.splits.train = j.value("train", std::vector<int>{});
        ds.splits.val = j.value("val", std::vector<int>{});
        ds.splits.test = j.value("test", std::vector<int>{});
    } else {
        ds.splits = stratified_split(ds.labels, cfg.seed);
    }
    ds.validate();
    return ds;
}

namespace {

std::vector<int> argmax_rows(const Tensor& logits) {
    std::vector<int> out(logits.rows());
    for (std::size_t i = 0; i < logits.rows(); ++i) {
        int best = 0;
        for (std::size_t j = 1; j < logits.cols(); ++j)
            if (logits.at(i, j) > logits.at(i, best)) best = static_cast<int>(j);
        out[i] = best;  // strict > keeps the lowest class id on ties
    }
    return out;
}

double accuracy_impl(const Model& model, const LabeledDataset& ds,
                     const std::vector<int>& mask) {
    if (mask.empty()) throw EmptySplit("empty evaluation mask");
    ForwardOpts opts;  // eval mode
    std::size_t correct = 0;
    if (ds.task == "graph") {
        for (int idx : mask) {
            const Sample& s = ds.samples[static_cast<std::size_t>(idx)];
            const Tensor logits = model.forward(s.cc, s.features, s.order, opts);
            if (argmax_rows(logits)[0] == ds.labels[static_cast<std::size_t>(idx)]) ++correct;
        }
    } else {
        const Sample& s = ds.samples[0];
        const Tensor logits = model.forward(s.cc, s.features, s.order, opts);
        const auto preds = argmax_rows(logits);
        for (int idx : mask)
            if (preds[static_cast<std::size_t>(idx)] ==
                ds.labels[static_cast<std::size_t>(idx)])
                ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(mask.size());
}

}  // namespace

double evaluate(const Model& model, const LabeledDataset& dataset,
                const std::vector<int>& mask) {
    dataset.validate();
    return accuracy_impl(model, dataset, mask);
}

TrainResult train(Model& model, const LabeledDataset& dataset) {
    dataset.validate();
    const ModelConfig& cfg = model.config();
    if (dataset.splits.train.empty()) throw EmptySplit("training mask is empty");

    Adam adam(cfg.lr);
    Rng run_rng(cfg.seed ^ 0x747261696eull);
    TrainResult result;
    ModelParams best = model.params().clone();
    double best_metric = -1.0;
    const bool select_on_val = !dataset.splits.val.empty();

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        double epoch_loss = 0.0;
        std::size_t loss_terms = 0;

        if (dataset.task == "graph") {
            std::vector<int> order = dataset.splits.train;
            Rng shuffle_rng = run_rng.fork(static_cast<std::uint64_t>(epoch));
            shuffle_rng.shuffle(order);
            for (std::size_t start = 0; start < order.size();
                 start += static_cast<std::size_t>(cfg.batch_size)) {
                const std::size_t stop =
                    std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
                Tape tape;
                ModelParams bound = model.params().attach(tape);
                Tensor batch_loss;
                bool first = true;
                for (std::size_t i = start; i < stop; ++i) {
                    const int idx = order[i];
                    const Sample& s = dataset.samples[static_cast<std::size_t>(idx)];
                    ForwardOpts opts;
                    opts.tape = &tape;
                    opts.train = true;
                    Rng drop_rng = run_rng.fork(
                        0x1000u + static_cast<std::uint64_t>(epoch) * 131071u +
                        static_cast<std::uint64_t>(idx));
                    opts.rng = &drop_rng;
                    const Tensor logits = model.forward(s.cc, s.features, s.order, bound, opts);
                    const Tensor loss = cross_entropy(
                        logits, {dataset.labels[static_cast<std::size_t>(idx)]});
                    batch_loss = first ? loss : add(batch_loss, loss);
                    first = false;
                }
                const double batch_n = static_cast<double>(stop - start);
                const Tensor mean_loss = scale(batch_loss, 1.0 / batch_n);
                epoch_loss += mean_loss.value() * batch_n;
                loss_terms += stop - start;
                tape.backward(mean_loss);
                adam.step(model.params(), bound, tape);
            }
        } else {
            const Sample& s = dataset.samples[0];
            Tape tape;
            ModelParams bound = model.params().attach(tape);
            ForwardOpts opts;
            opts.tape = &tape;
            opts.train = true;
            Rng drop_rng = run_rng.fork(0x2000u + static_cast<std::uint64_t>(epoch));
            opts.rng = &drop_rng;
            const Tensor logits = model.forward(s.cc, s.features, s.order, bound, opts);
            const Tensor masked = gather_rows(logits, dataset.splits.train);
            std::vector<int> labels;
            for (int idx : dataset.splits.train)
                labels.push_back(dataset.labels[static_cast<std::size_t>(idx)]);
            const Tensor loss = cross_entropy(masked, labels);
            epoch_loss += loss.value() * static_cast<double>(labels.size());
            loss_terms += labels.size();
            tape.backward(loss);
            adam.step(model.params(), bound, tape);
        }

        result.train_loss.push_back(epoch_loss / static_cast<double>(loss_terms));
        result.train_acc.push_back(accuracy_impl(model, dataset, dataset.splits.train));
        result.val_acc.push_back(select_on_val
                                     ? accuracy_impl(model, dataset, dataset.splits.val)
                                     : result.train_acc.back());
        const double metric = result.val_acc.back();
        if (metric > best_metric) {
            best_metric = metric;
            best = model.params().clone();
            result.best_epoch = epoch;
        }
    }

    if (cfg.epochs > 0) model.params() = best.clone();
    result.best_val_acc = std::max(best_metric, 0.0);
    result.test_acc = dataset.splits.test.empty()
                          ? 0.0
                          : accuracy_impl(model, dataset, dataset.splits.test);
    return result;
}

}  // namespace ccm
