#include "tci/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "tci/augment.hpp"
#include "tci/coarsen.hpp"
#include "tci/codec.hpp"
#include "tci/eval.hpp"
#include "tci/format.hpp"
#include "tci/model.hpp"
#include "tci/records.hpp"
#include "tci/train.hpp"

namespace tci::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<SequenceRecord> load_records(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");
    try {
        return read_records(in);
    } catch (const DataError& e) {
        throw DataError(path + ": " + e.what());
    }
}

std::ofstream open_output(const std::string& path) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw DataError("cannot write '" + path + "'");
    return os;
}

FeatureCodec load_codec(const std::string& path) {
    std::istringstream in(read_file(path));
    return FeatureCodec::read(in);
}

Model load_model(const std::string& path) {
    std::istringstream in(read_file(path));
    return Model::read(in);
}

CoarsenMode parse_mode(const std::string& s) {
    if (s == "grid") return CoarsenMode::Grid;
    if (s == "cluster") return CoarsenMode::Cluster;
    throw CLI::ValidationError("mode", "expected grid or cluster, got '" + s + "'");
}

Interval parse_interval(const std::string& s) {
    const auto comma = s.find(',');
    if (comma == std::string::npos) throw CLI::ValidationError("--interval", "expected A,B");
    const double a = parse_double(s.substr(0, comma), "--interval");
    const double b = parse_double(s.substr(comma + 1), "--interval");
    if (!(a < b)) throw CLI::ValidationError("--interval", "needs A < B");
    return {a, b};
}

std::vector<double> parse_list(const std::string& s, const std::string& what) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_double(item, what));
    if (out.empty()) throw CLI::ValidationError(what, "empty list");
    return out;
}

std::string short_double(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

void check_retention(double p, const std::string& what) {
    if (!(p > 0.0 && p <= 1.0)) throw CLI::ValidationError(what, "retention factor must lie in (0, 1]");
}

// ---- subcommands ---------------------------------------------------------

struct SynthArgs {
    std::string config;
    std::string out_dir;
    std::uint64_t seed = 0;
};

void cmd_synth(const SynthArgs& a) {
    SynthConfig cfg = parse_synth_config(read_file(a.config));
    cfg.seed = a.seed;
    const SynthDataset ds = generate(cfg);
    fs::create_directories(a.out_dir);
    const auto dump = [&](const SynthSplit& split, const char* name) {
        auto os = open_output((fs::path(a.out_dir) / name).string());
        for (const auto& item : split.items) os << format_record({item.sequence, item.label}) << '\n';
    };
    dump(ds.train, "train.jsonl");
    dump(ds.val, "val.jsonl");
    dump(ds.test, "test.jsonl");
    open_output((fs::path(a.out_dir) / "schema.json").string()) << format_schema(synth_schema(cfg));
}

struct CoarsenArgs {
    std::string mode;
    double p = 1.0;
    std::string interval;
    std::string in;
    std::string out;
};

void cmd_coarsen(const CoarsenArgs& a) {
    CoarseningSpec spec;
    spec.mode = parse_mode(a.mode);
    spec.p = a.p;
    check_retention(a.p, "--p");
    if (!a.interval.empty()) {
        if (spec.mode != CoarsenMode::Grid) throw CLI::ValidationError("--interval", "only applies to grid mode");
        spec.interval = parse_interval(a.interval);
    }
    auto records = load_records(a.in);
    for (auto& r : records) r.sequence = coarsen(r.sequence, spec);
    auto os = open_output(a.out);
    write_records(os, records);
}

struct AugmentArgs {
    double p_high = 0.0;
    bool weighted = false;
    std::uint64_t seed = 0;
    std::string in;
    std::string out;
};

void cmd_augment(const AugmentArgs& a) {
    if (!(a.p_high >= 0.0 && a.p_high < 1.0)) throw CLI::ValidationError("--p-high", "must lie in [0, 1)");
    AugmentConfig cfg{a.p_high, a.weighted, a.seed};
    auto records = load_records(a.in);
    for (std::size_t i = 0; i < records.size(); ++i) {
        Rng rng(mix_seed(a.seed, i));
        records[i].sequence = fast_augment(records[i].sequence, cfg, rng);
    }
    auto os = open_output(a.out);
    write_records(os, records);
}

struct FitCodecArgs {
    std::string in;
    std::string schema;
    std::string out;
};

void cmd_fit_codec(const FitCodecArgs& a) {
    const Schema schema = parse_schema(read_file(a.schema));
    const auto records = load_records(a.in);
    std::vector<EventSequence> seqs;
    seqs.reserve(records.size());
    for (const auto& r : records) seqs.push_back(r.sequence);
    const FeatureCodec codec = FeatureCodec::fit(schema, seqs);
    auto os = open_output(a.out);
    codec.write(os);
}

struct FeaturizeArgs {
    std::string codec;
    std::string in;
    std::string out;
};

void cmd_featurize(const FeaturizeArgs& a) {
    const FeatureCodec codec = load_codec(a.codec);
    const auto records = load_records(a.in);
    auto os = open_output(a.out);
    for (const auto& r : records) os << format_feature_record(r.sequence.id, codec.featurize(r.sequence)) << '\n';
}

struct TrainArgs {
    std::string in_dir;
    std::string codec;
    double augment_p_high = -1.0;
    bool weighted = false;
    std::string mre;
    std::string resolutions = "1,0.5,0.25,0.125";
    std::string interval;
    std::size_t epochs = 50;
    double lr = 0.01;
    double momentum = 0.9;
    std::size_t batch = 32;
    std::size_t hidden = 64;
    std::uint64_t seed = 0;
    std::string out;
    std::string trace;
};

void cmd_train(const TrainArgs& a, std::ostream& out) {
    const FeatureCodec codec = load_codec(a.codec);
    const auto train_records = load_records((fs::path(a.in_dir) / "train.jsonl").string());
    std::vector<SequenceRecord> val_records;
    if (const auto val_path = fs::path(a.in_dir) / "val.jsonl"; fs::exists(val_path)) {
        val_records = load_records(val_path.string());
    }
    const auto train_set = labeled(train_records);
    const auto val_set = labeled(val_records);

    TrainConfig cfg;
    cfg.epochs = a.epochs;
    cfg.learning_rate = a.lr;
    cfg.momentum = a.momentum;
    cfg.batch_size = a.batch;
    cfg.hidden = a.hidden;
    cfg.seed = a.seed;
    if (a.augment_p_high >= 0.0) {
        if (a.augment_p_high >= 1.0) throw CLI::ValidationError("--augment", "p_high must lie in [0, 1)");
        cfg.augment = AugmentConfig{a.augment_p_high, a.weighted, a.seed};
    } else if (a.weighted) {
        throw CLI::ValidationError("--weighted", "requires --augment");
    }
    if (!a.mre.empty()) {
        MreSettings mre;
        mre.mode = parse_mode(a.mre);
        mre.resolutions = parse_list(a.resolutions, "--resolutions");
        for (double p : mre.resolutions) check_retention(p, "--resolutions");
        if (!a.interval.empty()) mre.interval = parse_interval(a.interval);
        cfg.mre = std::move(mre);
    }

    const TrainResult result = train(train_set, val_set, codec, cfg);
    {
        auto os = open_output(a.out);
        result.model.write(os);
    }
    std::ostream* trace_os = &out;
    std::ofstream trace_file;
    if (!a.trace.empty()) {
        trace_file = open_output(a.trace);
        trace_os = &trace_file;
    }
    *trace_os << "epoch train_loss val_loss\n";
    for (const auto& e : result.trace) {
        *trace_os << e.epoch << ' ' << format_double(e.train_loss) << ' ' << format_double(e.val_loss) << '\n';
    }
}

struct EvaluateArgs {
    std::string model;
    std::string codec;
    std::string in;
    std::size_t bootstrap = 0;
    std::uint64_t seed = 0;
    bool seed_given = false;
    std::vector<double> fgsm;
    std::string gap;
    std::string format = "text";
    std::string out;
};

// Macro average over outputs of a per-output classification metric.
double macro(const std::function<double(std::span<const double>, std::span<const int>)>& metric,
             std::span<const double> preds, std::span<const double> targets, std::size_t outputs) {
    const std::size_t n = preds.size() / outputs;
    double total = 0.0;
    std::vector<double> s(n);
    std::vector<int> y(n);
    for (std::size_t o = 0; o < outputs; ++o) {
        for (std::size_t i = 0; i < n; ++i) {
            s[i] = preds[i * outputs + o];
            y[i] = targets[i * outputs + o] != 0.0 ? 1 : 0;
        }
        total += metric(s, y);
    }
    return total / static_cast<double>(outputs);
}

std::vector<std::pair<std::string, PairedMetric>> metrics_for(Task task, std::size_t outputs) {
    if (task == Task::Regression) {
        return {{"mae", mean_absolute_error}, {"rmse", root_mean_squared_error}, {"correlation", pearson_correlation}};
    }
    // Rows are flattened example-major, so resampling must keep an example's
    // outputs together; these metrics are only ever resampled per row by
    // `bootstrap_rows` below.
    return {{"roc_auc", [outputs](std::span<const double> p, std::span<const double> t) {
                 return macro(roc_auc, p, t, outputs);
             }},
            {"map", [outputs](std::span<const double> p, std::span<const double> t) {
                 return macro(average_precision, p, t, outputs);
             }}};
}

// Bootstrap over examples when each example has `outputs` flattened values.
BootstrapEstimate bootstrap_rows(const PairedMetric& metric, std::span<const double> preds,
                                 std::span<const double> targets, std::size_t outputs, std::size_t runs,
                                 std::uint64_t seed) {
    if (outputs == 1) return bootstrap(metric, preds, targets, runs, seed);
    // Resample example indices, then gather the rows.
    const std::size_t n = preds.size() / outputs;
    std::vector<double> index(n);
    for (std::size_t i = 0; i < n; ++i) index[i] = static_cast<double>(i);
    const PairedMetric gathered = [&](std::span<const double> idx, std::span<const double>) {
        std::vector<double> p;
        std::vector<double> t;
        p.reserve(idx.size() * outputs);
        t.reserve(idx.size() * outputs);
        for (double d : idx) {
            const auto i = static_cast<std::size_t>(d);
            p.insert(p.end(), preds.begin() + static_cast<std::ptrdiff_t>(i * outputs),
                     preds.begin() + static_cast<std::ptrdiff_t>((i + 1) * outputs));
            t.insert(t.end(), targets.begin() + static_cast<std::ptrdiff_t>(i * outputs),
                     targets.begin() + static_cast<std::ptrdiff_t>((i + 1) * outputs));
        }
        return metric(p, t);
    };
    return bootstrap(gathered, index, index, runs, seed);
}

void add_metrics(EvalReport& report, const std::string& prefix, Task task, std::size_t outputs,
                 std::span<const double> preds, std::span<const double> targets, std::size_t runs,
                 std::uint64_t seed) {
    for (const auto& [name, metric] : metrics_for(task, outputs)) {
        MetricEntry m;
        m.name = prefix + name;
        m.value = metric(preds, targets);
        if (runs > 0) {
            m.has_bootstrap = true;
            m.bootstrap = bootstrap_rows(metric, preds, targets, outputs, runs, seed);
        }
        report.metrics.push_back(std::move(m));
    }
}

void flatten_targets(const LabeledSequence& item, std::vector<double>& targets) {
    if (const auto* y = std::get_if<ClassLabel>(&item.label)) {
        for (int v : *y) targets.push_back(v);
    } else {
        targets.push_back(std::get<double>(item.label));
    }
}

void cmd_evaluate(const EvaluateArgs& a, std::ostream& out) {
    if (a.bootstrap > 0 && !a.seed_given) throw CLI::ValidationError("--bootstrap", "requires an explicit --seed");
    if (a.format != "text" && a.format != "kv") throw CLI::ValidationError("--format", "expected text or kv");
    const Model model = load_model(a.model);
    const FeatureCodec codec = load_codec(a.codec);
    const auto records = load_records(a.in);
    const auto data = labeled(records);
    if (data.empty()) throw DataError("evaluate: no sequences in '" + a.in + "'");

    const Task task = model.predictor.task();
    const std::size_t outputs = model.predictor.output_dim();
    std::vector<double> preds;
    std::vector<double> targets;
    for (const auto& item : data) {
        const auto p = model.predict(item.sequence, codec);
        preds.insert(preds.end(), p.begin(), p.end());
        flatten_targets(item, targets);
    }
    if (targets.size() != preds.size()) throw DataError("evaluate: labels do not match the model's outputs");

    EvalReport report;
    report.notes.emplace_back("sequences", std::to_string(data.size()));
    report.notes.emplace_back("task", task == Task::Classification ? "classification" : "regression");
    add_metrics(report, "", task, outputs, preds, targets, a.bootstrap, a.seed);

    for (double eps : a.fgsm) {
        if (!(eps >= 0.0)) throw CLI::ValidationError("--fgsm", "epsilon must be >= 0");
        std::vector<double> perturbed;
        for (const auto& item : data) {
            const auto p = fgsm_predict(model, codec, item, eps);
            perturbed.insert(perturbed.end(), p.begin(), p.end());
        }
        add_metrics(report, "fgsm[" + short_double(eps) + "].", task, outputs, perturbed, targets, 0, 0);
    }

    if (!a.gap.empty()) {
        const auto comma = a.gap.find(',');
        if (comma == std::string::npos) throw CLI::ValidationError("--invariance-gap", "expected MODE,P");
        CoarseningSpec spec;
        spec.mode = parse_mode(a.gap.substr(0, comma));
        spec.p = parse_double(a.gap.substr(comma + 1), "--invariance-gap");
        check_retention(spec.p, "--invariance-gap");
        std::vector<EventSequence> seqs;
        for (const auto& item : data) seqs.push_back(item.sequence);
        const auto gap = invariance_gap([&](const EventSequence& s) { return model.predict(s, codec); }, seqs,
                                        [&](const EventSequence& s, std::size_t) { return coarsen(s, spec); });
        report.notes.emplace_back("invariance_gap.transform", a.gap);
        for (std::size_t o = 0; o < gap.size(); ++o) {
            MetricEntry m;
            m.name = gap.size() == 1 ? "invariance_gap" : "invariance_gap[" + std::to_string(o) + "]";
            m.value = gap[o];
            report.metrics.push_back(std::move(m));
        }
    }

    std::ostream* os = &out;
    std::ofstream file;
    if (!a.out.empty()) {
        file = open_output(a.out);
        os = &file;
    }
    if (a.format == "kv") {
        report.write_kv(*os);
    } else {
        report.write_text(*os);
    }
}

}  // namespace

SynthConfig parse_synth_config(std::string_view text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw DataError(std::string("synth config: malformed JSON: ") + e.what());
    }
    if (!j.is_object()) throw DataError("synth config must be a JSON object");
    SynthConfig c;
    try {
        for (const auto& [key, v] : j.items()) {
            if (key == "n_sequences") c.n_sequences = v.get<std::size_t>();
            else if (key == "val_fraction") c.val_fraction = v.get<double>();
            else if (key == "test_fraction") c.test_fraction = v.get<double>();
            else if (key == "real_variables") c.real_variables = v.get<std::size_t>();
            else if (key == "ordinal_variables") c.ordinal_variables = v.get<std::size_t>();
            else if (key == "t_min") c.t_min = v.get<std::size_t>();
            else if (key == "t_max") c.t_max = v.get<std::size_t>();
            else if (key == "horizon_hours") c.horizon_hours = v.get<double>();
            else if (key == "burst_intensity") c.burst_intensity = v.get<double>();
            else if (key == "burst_spread_hours") c.burst_spread_hours = v.get<double>();
            else if (key == "observe_prob") c.observe_prob = v.get<double>();
            else if (key == "measurement_noise") c.measurement_noise = v.get<double>();
            else if (key == "signal_scale") c.signal_scale = v.get<double>();
            else if (key == "label_noise") c.label_noise = v.get<double>();
            else if (key == "task") {
                const auto t = v.get<std::string>();
                if (t == "classification") c.task = Task::Classification;
                else if (t == "regression") c.task = Task::Regression;
                else throw DataError("synth config: unknown task '" + t + "'");
            } else if (key == "seed") {
                throw DataError("synth config: pass the seed with --seed, not in the config file");
            } else {
                throw DataError("synth config: unknown key '" + key + "'");
            }
        }
    } catch (const json::exception& e) {
        throw DataError(std::string("synth config: ") + e.what());
    }
    check_config(c);
    return c;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Temporal-clustering transforms, codec, training and evaluation for irregular time series", "tci"};
    app.require_subcommand(1);

    SynthArgs synth_args;
    auto* synth = app.add_subcommand("synth", "generate synthetic train/val/test splits and a schema");
    synth->add_option("--config", synth_args.config, "JSON config")->required();
    synth->add_option("--out", synth_args.out_dir, "output directory")->required();
    synth->add_option("--seed", synth_args.seed, "RNG seed")->required();

    CoarsenArgs coarsen_args;
    auto* coarsen_cmd = app.add_subcommand("coarsen", "apply grid&count or cluster&count to every record");
    coarsen_cmd->add_option("--mode", coarsen_args.mode, "grid | cluster")->required();
    coarsen_cmd->add_option("--p", coarsen_args.p, "retention factor in (0, 1]")->required();
    coarsen_cmd->add_option("--interval", coarsen_args.interval, "grid window A,B (hours)");
    coarsen_cmd->add_option("--in", coarsen_args.in)->required();
    coarsen_cmd->add_option("--out", coarsen_args.out)->required();

    AugmentArgs augment_args;
    auto* augment_cmd = app.add_subcommand("augment", "one random temporal-clustering draw per record");
    augment_cmd->add_option("--p-high", augment_args.p_high, "largest merge fraction, [0, 1)")->required();
    augment_cmd->add_flag("--weighted", augment_args.weighted, "merge closer events more often");
    augment_cmd->add_option("--seed", augment_args.seed)->required();
    augment_cmd->add_option("--in", augment_args.in)->required();
    augment_cmd->add_option("--out", augment_args.out)->required();

    FitCodecArgs fit_args;
    auto* fit_cmd = app.add_subcommand("fit-codec", "fit the feature codec on training records");
    fit_cmd->add_option("--in", fit_args.in)->required();
    fit_cmd->add_option("--schema", fit_args.schema, "variable schema JSON")->required();
    fit_cmd->add_option("--out", fit_args.out)->required();

    FeaturizeArgs feat_args;
    auto* feat_cmd = app.add_subcommand("featurize", "encode records into feature matrices");
    feat_cmd->add_option("--codec", feat_args.codec)->required();
    feat_cmd->add_option("--in", feat_args.in)->required();
    feat_cmd->add_option("--out", feat_args.out)->required();

    TrainArgs train_args;
    auto* train_cmd = app.add_subcommand("train", "train the reference predictor (optionally MRE)");
    train_cmd->add_option("--in", train_args.in_dir, "directory with train.jsonl [and val.jsonl]")->required();
    train_cmd->add_option("--codec", train_args.codec)->required();
    train_cmd->add_option("--augment", train_args.augment_p_high, "augment with this p_high each epoch");
    train_cmd->add_flag("--weighted", train_args.weighted, "weighted augmentation");
    train_cmd->add_option("--mre", train_args.mre, "grid | cluster");
    train_cmd->add_option("--resolutions", train_args.resolutions, "MRE retention factors")
        ->capture_default_str();
    train_cmd->add_option("--interval", train_args.interval, "grid window A,B for MRE-grid");
    train_cmd->add_option("--epochs", train_args.epochs)->capture_default_str();
    train_cmd->add_option("--lr", train_args.lr)->capture_default_str();
    train_cmd->add_option("--momentum", train_args.momentum)->capture_default_str();
    train_cmd->add_option("--batch", train_args.batch)->capture_default_str();
    train_cmd->add_option("--hidden", train_args.hidden)->capture_default_str();
    train_cmd->add_option("--seed", train_args.seed)->required();
    train_cmd->add_option("--out", train_args.out, "model file")->required();
    train_cmd->add_option("--trace", train_args.trace, "write the loss trace here instead of stdout");

    EvaluateArgs eval_args;
    auto* eval_cmd = app.add_subcommand("evaluate", "metrics, bootstrap, FGSM and invariance gap");
    eval_cmd->add_option("--model", eval_args.model)->required();
    eval_cmd->add_option("--codec", eval_args.codec)->required();
    eval_cmd->add_option("--in", eval_args.in)->required();
    eval_cmd->add_option("--bootstrap", eval_args.bootstrap, "bootstrap runs (e.g. 1000)");
    auto* seed_opt = eval_cmd->add_option("--seed", eval_args.seed, "bootstrap seed");
    eval_cmd->add_option("--fgsm", eval_args.fgsm, "FGSM epsilon(s)")->delimiter(',');
    eval_cmd->add_option("--invariance-gap", eval_args.gap, "MODE,P");
    eval_cmd->add_option("--format", eval_args.format, "text | kv")->capture_default_str();
    eval_cmd->add_option("--out", eval_args.out, "write the report here instead of stdout");

    std::vector<std::string> argv_rev(args.rbegin(), args.rend());
    if (!argv_rev.empty()) argv_rev.pop_back();  // program name
    try {
        app.parse(argv_rev);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? kOk : kUsage;
    }

    try {
        if (*synth) {
            cmd_synth(synth_args);
        } else if (*coarsen_cmd) {
            cmd_coarsen(coarsen_args);
        } else if (*augment_cmd) {
            cmd_augment(augment_args);
        } else if (*fit_cmd) {
            cmd_fit_codec(fit_args);
        } else if (*feat_cmd) {
            cmd_featurize(feat_args);
        } else if (*train_cmd) {
            cmd_train(train_args, out);
        } else if (*eval_cmd) {
            eval_args.seed_given = seed_opt->count() > 0;
            cmd_evaluate(eval_args, out);
        }
    } catch (const CLI::ValidationError& e) {
        err << "usage error: " << e.what() << '\n';
        return kUsage;
    } catch (const NumericError& e) {
        err << "numeric failure: " << e.what() << '\n';
        return kNumericFailure;
    } catch (const DataError& e) {
        err << "data error: " << e.what() << '\n';
        return kDataError;
    } catch (const std::invalid_argument& e) {
        err << "data error: " << e.what() << '\n';
        return kDataError;
    } catch (const fs::filesystem_error& e) {
        err << "data error: " << e.what() << '\n';
        return kDataError;
    } catch (const std::exception& e) {
        err << "data error: " << e.what() << '\n';
        return kDataError;
    }
    return kOk;
}

}  // namespace tci::cli
