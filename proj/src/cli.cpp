#include "hst/cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "config_detail.hpp"
#include "hst/archive.hpp"
#include "hst/cache.hpp"
#include "hst/config.hpp"
#include "hst/errors.hpp"
#include "hst/evaluate.hpp"
#include "hst/models.hpp"
#include "hst/rng.hpp"
#include "hst/sha256.hpp"
#include "hst/stage.hpp"
#include "hst/synthetic.hpp"
#include "hst/uji.hpp"

namespace hst::cli {
namespace {

namespace fs = std::filesystem;
using detail::json;
using detail::ordered_json;

void write_text_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError(path.string(), -1, "cannot open for writing");
    out << text;
    if (!out) throw DataError(path.string(), -1, "write failed");
}

void write_json_file(const fs::path& path, const ordered_json& doc) {
    write_text_file(path, doc.dump(1) + "\n");
}

json load_json_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError(path.string(), -1, "cannot open");
    try {
        json j;
        in >> j;
        return j;
    } catch (const json::exception& e) {
        throw DataError(path.string(), -1, std::string("malformed JSON: ") + e.what());
    }
}

void print_warnings(const std::vector<std::string>& warnings) {
    for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
}

std::string resolve_data_dir(const std::string& flag_or_config) {
    if (const char* env = std::getenv("HST_DATA_DIR"); env && *env) return env;
    if (!flag_or_config.empty()) return flag_or_config;
    throw ConfigError("no data directory given (set data.cache_dir, --data, or HST_DATA_DIR)");
}

data::Dataset load_split(const std::string& dir, const std::string& split) {
    if (split != "train" && split != "test") {
        throw ConfigError("unknown split \"" + split + "\" (expected train or test)");
    }
    return io::load_dataset_cache((fs::path(dir) / (split + ".bin")).string());
}

data::SitePlan merge_site_plans(const data::SitePlan& a, const data::SitePlan& b) {
    data::SitePlan p;
    p.num_buildings = std::max(a.num_buildings, b.num_buildings);
    p.floors_per_building.assign(p.num_buildings, 1);
    for (int i = 0; i < p.num_buildings; ++i) {
        if (i < static_cast<int>(a.floors_per_building.size())) {
            p.floors_per_building[i] = std::max(p.floors_per_building[i],
                                                a.floors_per_building[i]);
        }
        if (i < static_cast<int>(b.floors_per_building.size())) {
            p.floors_per_building[i] = std::max(p.floors_per_building[i],
                                                b.floors_per_building[i]);
        }
    }
    p.num_aps = std::max(a.num_aps, b.num_aps);
    return p;
}

// Shared by prepare-data and synth: bins + manifest under `out`, counts line
// on stdout. Nothing is written until both datasets are in memory.
void write_cache_dir(const std::string& out, const data::Dataset& train,
                     const data::Dataset& test, ordered_json source,
                     const std::vector<std::string>& warnings, bool force) {
    const fs::path dir(out);
    if (fs::exists(dir / "manifest.json") && !force) {
        throw ConfigError(out + ": cache already exists (use --force to overwrite)");
    }
    fs::create_directories(dir);
    io::save_dataset_cache((dir / "train.bin").string(), train);
    io::save_dataset_cache((dir / "test.bin").string(), test);

    ordered_json m;
    m["format"] = "hst-cache";
    m["version"] = 1;
    m["source"] = std::move(source);
    m["site_plan"] = detail::site_plan_to_json(train.plan);
    m["scaler"] = detail::scaler_to_json(train.scaler);
    ordered_json files = ordered_json::array();
    for (const char* name : {"train.bin", "test.bin"}) {
        ordered_json f;
        f["name"] = name;
        f["records"] = std::string(name) == "train.bin" ? train.count() : test.count();
        f["sha256"] = sha256_file_hex((dir / name).string());
        files.push_back(std::move(f));
    }
    m["files"] = std::move(files);
    m["warnings"] = warnings;
    write_json_file(dir / "manifest.json", m);

    std::cout << "train=" << train.count() << " test=" << test.count() << "\n";
    print_warnings(warnings);
}

void write_loss_csv(const fs::path& path, const train::TrainTrace& t) {
    std::ostringstream out;
    out << "epoch,train_loss,val_loss,lr\n";
    out.precision(10);
    for (std::size_t i = 0; i < t.train_loss.size(); ++i) {
        out << (i + 1) << "," << t.train_loss[i] << ",";
        if (i < t.val_loss.size()) out << t.val_loss[i];
        out << "," << t.lr[i] << "\n";
    }
    write_text_file(path, out.str());
}

double total_trace_seconds(const std::vector<train::StageResult>& results) {
    double s = 0.0;
    for (const auto& r : results) s += r.trace.seconds;
    return s;
}

train::EpochLogger stage_logger(const std::string& name, bool verbose) {
    if (!verbose) return {};
    return [name](const train::EpochLog& log) {
        std::ostringstream line;
        line << "[" << name << "] epoch " << log.epoch << "  train " << std::setprecision(6)
             << log.train_loss;
        if (std::isfinite(log.val_loss)) line << "  val " << log.val_loss;
        line << "  lr " << log.lr;
        std::cerr << line.str() << "\n";
    };
}

// ---- prepare-data ---------------------------------------------------------

struct PrepareArgs {
    std::string train_csv, test_csv, out;
    bool force = false;
};

void cmd_prepare_data(const PrepareArgs& args) {
    const auto train_raw = data::load_ujiindoorloc_csv(args.train_csv, data::UjiRole::Train);
    const auto test_raw = data::load_ujiindoorloc_csv(args.test_csv, data::UjiRole::Test);

    const data::SitePlan plan =
        merge_site_plans(data::infer_site_plan(train_raw.records, data::kUjiApCount),
                         data::infer_site_plan(test_raw.records, data::kUjiApCount));
    const data::ScalerParams scaler = data::fit_scaler(train_raw.records);
    const data::Dataset train = data::build_dataset(train_raw.records, plan, scaler, "train");
    const data::Dataset test = data::build_dataset(test_raw.records, plan, scaler, "test");

    std::vector<std::string> warnings = train_raw.warnings;
    warnings.insert(warnings.end(), test_raw.warnings.begin(), test_raw.warnings.end());

    ordered_json source;
    source["kind"] = "ujiindoorloc";
    source["train_csv"] = args.train_csv;
    source["train_csv_sha256"] = sha256_file_hex(args.train_csv);
    source["test_csv"] = args.test_csv;
    source["test_csv_sha256"] = sha256_file_hex(args.test_csv);
    write_cache_dir(args.out, train, test, std::move(source), warnings, args.force);
}

// ---- synth -----------------------------------------------------------------

struct SynthArgs {
    std::string site, out;
    std::uint64_t seed = 0;
    bool force = false;
};

ordered_json synthetic_config_to_json(const data::SyntheticConfig& cfg) {
    ordered_json j;
    j["buildings"] = cfg.plan.num_buildings;
    j["floors_per_building"] = cfg.plan.floors_per_building;
    j["num_aps"] = cfg.plan.num_aps;
    j["path_loss_exponent"] = cfg.path_loss_exponent;
    j["ref_power_dbm"] = cfg.ref_power_dbm;
    j["noise_sigma_db"] = cfg.noise_sigma_db;
    j["detect_threshold_dbm"] = cfg.detect_threshold_dbm;
    j["train_records"] = cfg.train_records;
    j["test_records"] = cfg.test_records;
    j["floor_height_m"] = cfg.floor_height_m;
    j["building_w_m"] = cfg.building_w_m;
    j["building_d_m"] = cfg.building_d_m;
    ordered_json origins = ordered_json::array();
    for (const auto& [x, y] : cfg.building_origins) origins.push_back({x, y});
    j["building_origins"] = std::move(origins);
    j["ap_height_m"] = cfg.ap_height_m;
    j["receiver_height_m"] = cfg.receiver_height_m;
    return j;
}

void cmd_synth(const SynthArgs& args) {
    const data::SyntheticConfig cfg =
        args.site.empty() ? data::SyntheticConfig{} : parse_synthetic_config(args.site);
    const data::SyntheticSite site = data::generate_synthetic(cfg, args.seed);

    ordered_json source;
    source["kind"] = "synthetic";
    source["seed"] = args.seed;
    source["config"] = synthetic_config_to_json(cfg);
    write_cache_dir(args.out, site.train, site.test, std::move(source), site.warnings,
                    args.force);
}

// ---- train -----------------------------------------------------------------

struct TrainArgs {
    std::string config;
    std::string mode;       // "", "hst" or "reference"
    long long seed = -1;    // < 0: take the config's seed
    bool verbose = false;
};

std::string stage_file_name(int stage) { return "stage" + std::to_string(stage) + ".weights.json"; }

ordered_json timing_entry(int stage, const std::string& name, const train::TrainTrace& t) {
    ordered_json e;
    e["stage"] = stage;
    e["name"] = name;
    e["epochs"] = t.train_loss.size();
    e["seconds"] = t.seconds;
    return e;
}

void cmd_train(const TrainArgs& args) {
    RunConfig cfg = parse_run_config(args.config);
    if (args.seed >= 0) cfg.seed = static_cast<std::uint64_t>(args.seed);

    const bool is_reference = cfg.kind == model::ModelKind::ReferenceDnn ||
                              cfg.kind == model::ModelKind::ReferenceCnnloc;
    if (!args.mode.empty()) {
        if (args.mode != "hst" && args.mode != "reference") {
            throw ConfigError("unknown mode \"" + args.mode + "\" (expected hst or reference)");
        }
        if ((args.mode == "reference") != is_reference) {
            throw ConfigError(std::string("--mode ") + args.mode + " does not match model " +
                              model::model_kind_name(cfg.kind));
        }
    }

    const std::string data_dir = resolve_data_dir(cfg.cache_dir);
    const data::Dataset train_data = load_split(data_dir, "train");
    cfg.sae.input_width = train_data.width;
    cfg.dnn.sae = cfg.sae;
    cfg.cnn.sae = cfg.sae;

    const fs::path out(cfg.output_dir);
    fs::create_directories(out);

    std::vector<std::string> warnings;
    ordered_json timing_stages = ordered_json::array();
    std::optional<std::string> sae_path;

    if (cfg.sae_enabled) {
        if (args.verbose) std::cerr << "pretraining SAE...\n";
        model::StageHyper sae_hyper = cfg.sae_hyper;
        train::StageResult sae = model::pretrain_sae(cfg.sae, train_data, sae_hyper,
                                                     derive_seed(cfg.seed, 0xaeu));
        sae_path = (out / "sae.weights.json").string();
        io::save_weights_archive(*sae_path, io::WeightsArchive{"sae", 0, "sae", sae.weights});
        write_loss_csv(out / "loss_sae.csv", sae.trace);
        timing_stages.push_back(timing_entry(0, "sae", sae.trace));
        warnings.insert(warnings.end(), sae.warnings.begin(), sae.warnings.end());
        std::cout << "sae: " << sae.trace.train_loss.size() << " epochs, " << std::fixed
                  << std::setprecision(1) << sae.trace.seconds << " s\n"
                  << std::defaultfloat << std::setprecision(6);
    }

    std::vector<train::StageResult> results;
    switch (cfg.kind) {
        case model::ModelKind::LinkedDnn: {
            auto plans = model::linked_dnn_schedule(cfg.dnn, train_data, cfg.stages[0],
                                                    cfg.stages[1], sae_path, cfg.seed);
            for (auto& p : plans) p.epoch_log = stage_logger(p.name, args.verbose);
            results = train::run_hst(plans);
            break;
        }
        case model::ModelKind::LinkedCnnloc: {
            auto plans = model::linked_cnnloc_schedule(cfg.cnn, train_data, cfg.stages[0],
                                                       cfg.stages[1], cfg.stages[2], sae_path,
                                                       cfg.seed);
            for (auto& p : plans) p.epoch_log = stage_logger(p.name, args.verbose);
            results = train::run_hst(plans);
            break;
        }
        case model::ModelKind::ReferenceDnn:
        case model::ModelKind::ReferenceCnnloc: {
            train::ReferencePlan plan =
                cfg.kind == model::ModelKind::ReferenceDnn
                    ? model::reference_dnn_plan(cfg.dnn, train_data, cfg.stages[0], cfg.seed)
                    : model::reference_cnnloc_plan(cfg.cnn, train_data, cfg.stages[0], cfg.seed);
            if (sae_path) model::apply_pretrained_encoder(plan, *sae_path);
            plan.epoch_log = stage_logger(plan.name, args.verbose);
            results = {train::train_reference(plan)};
            break;
        }
    }

    ordered_json stage_manifest = ordered_json::array();
    for (const auto& r : results) {
        const std::string file = stage_file_name(r.stage);
        io::save_weights_archive((out / file).string(),
                                 io::WeightsArchive{model::model_kind_name(cfg.kind), r.stage,
                                                    r.name, r.weights});
        write_loss_csv(out / ("loss_stage" + std::to_string(r.stage) + ".csv"), r.trace);
        timing_stages.push_back(timing_entry(r.stage, r.name, r.trace));
        warnings.insert(warnings.end(), r.warnings.begin(), r.warnings.end());

        ordered_json s;
        s["stage"] = r.stage;
        s["name"] = r.name;
        s["file"] = file;
        s["sha256"] = r.checksum;
        stage_manifest.push_back(std::move(s));

        std::cout << "stage " << r.stage << " (" << r.name << "): "
                  << r.trace.train_loss.size() << " epochs, " << std::fixed
                  << std::setprecision(1) << r.trace.seconds << " s"
                  << std::defaultfloat << std::setprecision(6);
        if (!r.trace.train_loss.empty()) {
            std::cout << ", final train loss " << r.trace.train_loss.back();
        }
        std::cout << "\n";
    }

    ordered_json manifest;
    manifest["format"] = "hst-model";
    manifest["version"] = 1;
    manifest["model"] = model::model_kind_name(cfg.kind);
    manifest["seed"] = cfg.seed;
    manifest["site_plan"] = detail::site_plan_to_json(train_data.plan);
    manifest["scaler"] = detail::scaler_to_json(train_data.scaler);
    manifest["sae"]["encoder_widths"] = cfg.sae.encoder_widths;
    manifest["dnn"] = detail::dnn_config_to_json(cfg.dnn);
    manifest["cnn"] = detail::cnn_config_to_json(cfg.cnn);
    manifest["error_model"] = detail::error_model_to_json(cfg.error_model);
    manifest["sae_archive"] = sae_path ? ordered_json("sae.weights.json") : ordered_json(nullptr);
    manifest["stages"] = std::move(stage_manifest);
    manifest["warnings"] = warnings;
    write_json_file(out / "model.json", manifest);

    ordered_json timing;
    timing["format"] = "hst-timing";
    timing["version"] = 1;
    timing["model"] = model::model_kind_name(cfg.kind);
    timing["seed"] = cfg.seed;
    double total = total_trace_seconds(results);
    for (const auto& e : timing_stages) {
        if (e["stage"].get<int>() == 0) total += e["seconds"].get<double>();
    }
    timing["stages"] = std::move(timing_stages);
    timing["total_seconds"] = total;
    write_json_file(out / "timing.json", timing);

    print_warnings(warnings);
}

// ---- evaluate --------------------------------------------------------------

struct EvalArgs {
    std::string weights, data, split = "test", error_model, out;
};

bool same_scaler(const data::ScalerParams& a, const data::ScalerParams& b) {
    return a.rssi_min == b.rssi_min && a.rssi_max == b.rssi_max && a.x_min == b.x_min &&
           a.x_max == b.x_max && a.y_min == b.y_min && a.y_max == b.y_max;
}

bool same_plan(const data::SitePlan& a, const data::SitePlan& b) {
    return a.num_buildings == b.num_buildings && a.floors_per_building == b.floors_per_building &&
           a.num_aps == b.num_aps;
}

ordered_json report_to_json(const eval::EvalReport& r) {
    ordered_json j;
    j["format"] = "hst-report";
    j["version"] = 1;
    j["model"] = r.model;
    j["dataset"] = r.dataset_tag;
    j["count"] = r.count;
    j["building_hit_rate"] = r.building_hit_rate;
    j["floor_hit_rate"] = r.floor_hit_rate;
    j["error_avg_m"] = r.error_avg_m;
    j["error_std_m"] = r.error_std_m;
    j["error_min_m"] = r.error_min_m;
    j["error_median_m"] = r.error_median_m;
    j["error_max_m"] = r.error_max_m;
    j["error_model"] = detail::error_model_to_json(r.error_model);
    return j;
}

eval::EvalReport report_from_json(const json& j, const std::string& where) {
    std::vector<std::string> issues;
    eval::EvalReport r;
    try {
        r.model = j.at("model").get<std::string>();
        r.dataset_tag = j.at("dataset").get<std::string>();
        r.count = j.at("count").get<std::size_t>();
        r.building_hit_rate = j.at("building_hit_rate").get<double>();
        r.floor_hit_rate = j.at("floor_hit_rate").get<double>();
        r.error_avg_m = j.at("error_avg_m").get<double>();
        r.error_std_m = j.at("error_std_m").get<double>();
        r.error_min_m = j.at("error_min_m").get<double>();
        r.error_median_m = j.at("error_median_m").get<double>();
        r.error_max_m = j.at("error_max_m").get<double>();
        r.error_model = detail::error_model_from_json(j.at("error_model"), where, issues);
    } catch (const json::exception& e) {
        throw DataError(where, -1, std::string("malformed report: ") + e.what());
    }
    if (!issues.empty()) throw DataError(where, -1, "malformed report: " + issues.front());
    return r;
}

void cmd_evaluate(const EvalArgs& args) {
    fs::path manifest_path(args.weights);
    if (fs::is_directory(manifest_path)) manifest_path /= "model.json";
    const fs::path run_dir = manifest_path.parent_path();
    const json manifest = load_json_file(manifest_path);
    if (!manifest.is_object() || manifest.value("format", "") != "hst-model") {
        throw DataError(manifest_path.string(), -1, "not a model manifest");
    }

    std::vector<std::string> issues;
    const model::ModelKind kind = model::model_kind_from(manifest.at("model").get<std::string>());
    const data::SitePlan plan =
        detail::site_plan_from_json(manifest.at("site_plan"), "model.site_plan", issues);
    const data::ScalerParams scaler =
        detail::scaler_from_json(manifest.at("scaler"), "model.scaler", issues);
    model::SaeConfig sae =
        detail::sae_config_from_json(manifest.at("sae"), "model.sae", issues);
    model::DnnConfig dnn = detail::dnn_config_from_json(manifest.at("dnn"), "model.dnn", issues);
    model::CnnConfig cnn = detail::cnn_config_from_json(manifest.at("cnn"), "model.cnn", issues);
    eval::ErrorModelConfig em = detail::error_model_from_json(manifest.at("error_model"),
                                                              "model.error_model", issues);
    if (!issues.empty()) {
        std::string msg = manifest_path.string() + ": invalid manifest:";
        for (const auto& s : issues) msg += "\n  - " + s;
        throw DataError(msg);
    }
    sae.input_width = static_cast<std::size_t>(plan.num_aps);
    dnn.sae = sae;
    cnn.sae = sae;

    std::vector<io::BlockWeights> stage_weights;
    for (const auto& s : manifest.at("stages")) {
        const std::string file = s.at("file").get<std::string>();
        io::WeightsArchive archive = io::load_weights_archive((run_dir / file).string());
        if (archive.model != model::model_kind_name(kind)) {
            throw ConfigError(file + ": archive holds " + archive.model + " weights, manifest is " +
                              model::model_kind_name(kind));
        }
        if (io::weights_checksum(archive.blocks) != s.at("sha256").get<std::string>()) {
            throw ConfigError(file + ": weights do not match the manifest checksum");
        }
        stage_weights.push_back(std::move(archive.blocks));
    }

    const model::ModelBundle bundle = model::make_bundle(kind, dnn, cnn, plan, scaler,
                                                         stage_weights);

    const data::Dataset ds = load_split(resolve_data_dir(args.data), args.split);
    if (!same_plan(ds.plan, plan)) {
        throw ConfigError("dataset site plan does not match the model's training site plan");
    }
    if (!same_scaler(ds.scaler, scaler)) {
        std::cerr << "warning: dataset scaler differs from the model's training scaler\n";
    }

    if (!args.error_model.empty()) em = parse_error_model_name(args.error_model, em);

    const std::vector<data::Prediction> preds = model::predict(bundle, ds.features_tensor());
    eval::EvalReport report = eval::evaluate(preds, data::ground_truth(ds), em);
    report.model = model::model_kind_name(kind);
    report.dataset_tag = ds.tag;

    const fs::path out_dir = args.out.empty() ? run_dir : fs::path(args.out);
    fs::create_directories(out_dir);
    const std::string table = eval::report_table({report});
    write_json_file(out_dir / ("report_" + args.split + ".json"), report_to_json(report));
    write_text_file(out_dir / ("report_" + args.split + ".txt"), table);
    std::cout << table;
}

// ---- report ----------------------------------------------------------------

struct ReportArgs {
    std::vector<std::string> runs;
    std::string out;
};

void cmd_report(const ReportArgs& args) {
    struct RunInfo {
        std::string model;
        eval::EvalReport report;
        double train_seconds = 0.0;
    };
    std::vector<RunInfo> runs;
    for (const auto& dir : args.runs) {
        RunInfo info;
        const json manifest = load_json_file(fs::path(dir) / "model.json");
        info.model = manifest.at("model").get<std::string>();
        const fs::path report_path = fs::path(dir) / "report_test.json";
        if (!fs::exists(report_path)) {
            throw DataError(report_path.string(), -1, "missing (run evaluate on this run first)");
        }
        info.report = report_from_json(load_json_file(report_path), report_path.string());
        const json timing = load_json_file(fs::path(dir) / "timing.json");
        info.train_seconds = timing.at("total_seconds").get<double>();
        runs.push_back(std::move(info));
    }
    if (runs.empty()) throw ConfigError("no run directories given");
    for (const auto& r : runs) {
        if (!(r.report.error_model == runs.front().report.error_model)) {
            throw ConfigError("runs use different error models; refusing to aggregate");
        }
    }

    std::map<std::string, std::vector<const RunInfo*>> by_model;
    for (const auto& r : runs) by_model[r.model].push_back(&r);

    std::vector<eval::EvalReport> rows;
    ordered_json jmodels = ordered_json::array();
    std::ostringstream timing_table;
    timing_table << std::left << std::setw(18) << "model" << std::right << std::setw(6) << "runs"
                 << std::setw(14) << "train (s)" << "\n";
    for (const auto& [name, infos] : by_model) {
        eval::EvalReport mean;
        mean.model = name;
        mean.dataset_tag = infos.front()->report.dataset_tag + " (mean of " +
                           std::to_string(infos.size()) + " runs)";
        mean.count = infos.front()->report.count;
        mean.error_model = infos.front()->report.error_model;
        double seconds = 0.0;
        for (const RunInfo* r : infos) {
            mean.building_hit_rate += r->report.building_hit_rate;
            mean.floor_hit_rate += r->report.floor_hit_rate;
            mean.error_avg_m += r->report.error_avg_m;
            mean.error_std_m += r->report.error_std_m;
            mean.error_min_m += r->report.error_min_m;
            mean.error_median_m += r->report.error_median_m;
            mean.error_max_m += r->report.error_max_m;
            seconds += r->train_seconds;
        }
        const double n = static_cast<double>(infos.size());
        mean.building_hit_rate /= n;
        mean.floor_hit_rate /= n;
        mean.error_avg_m /= n;
        mean.error_std_m /= n;
        mean.error_min_m /= n;
        mean.error_median_m /= n;
        mean.error_max_m /= n;
        seconds /= n;
        rows.push_back(mean);

        timing_table << std::left << std::setw(18) << name << std::right << std::setw(6)
                     << infos.size() << std::setw(14) << std::fixed << std::setprecision(1)
                     << seconds << "\n";
        timing_table << std::defaultfloat << std::setprecision(6);

        ordered_json jm = report_to_json(mean);
        jm.erase("format");
        jm.erase("version");
        jm["runs"] = infos.size();
        jm["mean_train_seconds"] = seconds;
        jmodels.push_back(std::move(jm));
    }

    const std::string table = eval::report_table(rows) + "\n" + timing_table.str();
    std::cout << table;
    if (!args.out.empty()) {
        fs::create_directories(args.out);
        ordered_json doc;
        doc["format"] = "hst-summary";
        doc["version"] = 1;
        doc["models"] = std::move(jmodels);
        write_json_file(fs::path(args.out) / "summary.json", doc);
        write_text_file(fs::path(args.out) / "summary.txt", table);
    }
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"hierarchical stage-wise training of linked NNs for Wi-Fi RSSI localization"};
    app.require_subcommand(1);

    PrepareArgs prep;
    CLI::App* prepare = app.add_subcommand("prepare-data",
                                           "parse UJIIndoorLoc CSVs into a dataset cache");
    prepare->add_option("--train-csv", prep.train_csv, "trainingData.csv path")->required();
    prepare->add_option("--test-csv", prep.test_csv, "validationData.csv path (used as test set)")
        ->required();
    prepare->add_option("--out", prep.out, "cache output directory")->required();
    prepare->add_flag("--force", prep.force, "overwrite an existing cache");
    prepare->callback([&prep] { cmd_prepare_data(prep); });

    SynthArgs synth;
    CLI::App* synth_cmd = app.add_subcommand("synth", "generate a synthetic site dataset cache");
    synth_cmd->add_option("--site", synth.site, "synthetic site config JSON (defaults when omitted)");
    synth_cmd->add_option("--seed", synth.seed, "generation seed")->required();
    synth_cmd->add_option("--out", synth.out, "cache output directory")->required();
    synth_cmd->add_flag("--force", synth.force, "overwrite an existing cache");
    synth_cmd->callback([&synth] { cmd_synth(synth); });

    TrainArgs tr;
    CLI::App* train_cmd = app.add_subcommand("train", "train a model per a run config");
    train_cmd->add_option("--config", tr.config, "run config JSON")->required();
    train_cmd->add_option("--mode", tr.mode, "hst | reference (must match the config's model)");
    train_cmd->add_option("--seed", tr.seed, "override the config's seed");
    train_cmd->add_flag("--verbose", tr.verbose, "per-epoch progress on stderr");
    train_cmd->callback([&tr] { cmd_train(tr); });

    EvalArgs ev;
    CLI::App* eval_cmd = app.add_subcommand("evaluate", "evaluate trained weights on a dataset");
    eval_cmd->add_option("--weights", ev.weights, "model.json (or its run directory)")->required();
    eval_cmd->add_option("--data", ev.data, "dataset cache directory");
    eval_cmd->add_option("--split", ev.split, "train | test (default test)");
    eval_cmd->add_option("--error-model", ev.error_model, "penalty | euclidean3d override");
    eval_cmd->add_option("--out", ev.out, "report output directory (default: run directory)");
    eval_cmd->callback([&ev] { cmd_evaluate(ev); });

    ReportArgs rep;
    CLI::App* report_cmd = app.add_subcommand("report", "aggregate evaluated runs");
    report_cmd->add_option("--runs", rep.runs, "run directories")->required()->expected(-1);
    report_cmd->add_option("--out", rep.out, "summary output directory");
    report_cmd->callback([&rep] { cmd_report(rep); });

    try {
        app.parse(argc, argv);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitConfig;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kExitInternal;
    }
}

}  // namespace hst::cli
