#include "hst/stage.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "hst/errors.hpp"
#include "hst/rng.hpp"

namespace hst::train {
namespace {

constexpr std::size_t kEvalChunk = 256;

std::size_t target_width(const data::Dataset& d, TargetKind kind) {
    switch (kind) {
        case TargetKind::OneHotConcat: return static_cast<std::size_t>(d.plan.label_width());
        case TargetKind::OneHotBuilding: return static_cast<std::size_t>(d.plan.num_buildings);
        case TargetKind::OneHotFloor: return static_cast<std::size_t>(d.plan.num_floors());
        case TargetKind::Coords2D: return 2;
        case TargetKind::Reconstruction: return d.width;
    }
    throw Error("unknown target kind");
}

// Mean loss of `net` over (X, Y), evaluated in fixed-size chunks.
double net_loss(const nn::Network<float>& net, nn::LossKind kind, const nn::Tensor<float>& X,
                const nn::Tensor<float>& Y) {
    const std::size_t n = X.shape[0];
    double acc = 0.0;
    std::vector<std::size_t> idx;
    for (std::size_t at = 0; at < n; at += kEvalChunk) {
        const std::size_t m = std::min(kEvalChunk, n - at);
        idx.resize(m);
        std::iota(idx.begin(), idx.end(), at);
        const auto xb = nn::gather_rows(X, idx);
        const auto yb = nn::gather_rows(Y, idx);
        const auto acts = nn::forward(net, xb);
        acc += nn::loss_eval(kind, acts.back(), yb).value * static_cast<double>(m);
    }
    return acc / static_cast<double>(n);
}

struct LoopConfig {
    int max_epochs = 0;
    std::size_t batch_size = 1;
    std::uint64_t shuffle_seed = 0;
    double initial_lr = 1e-3;
    std::optional<nn::PlateauConfig> scheduler;
    int early_stop_patience = -1;  // < 0: disabled
    bool have_val = false;
    EpochLogger epoch_log;
};

// Epoch loop shared by stage and reference training. `Problem` provides
// train_count/step/val_loss/set_lr/snapshot/restore.
template <typename Problem>
TrainTrace run_loop(Problem& prob, const LoopConfig& cfg) {
    TrainTrace trace;
    const auto t0 = std::chrono::steady_clock::now();
    Rng shuffle_rng(derive_seed(cfg.shuffle_seed, 0xba7cu));
    std::vector<std::size_t> order(prob.train_count());
    std::iota(order.begin(), order.end(), 0);

    double current_lr = cfg.initial_lr;
    std::optional<nn::PlateauScheduler> sched;
    if (cfg.scheduler) sched.emplace(*cfg.scheduler, cfg.initial_lr);

    const bool early = cfg.early_stop_patience >= 0 && cfg.have_val;
    double best_val = std::numeric_limits<double>::infinity();
    int bad_epochs = 0;
    bool have_snapshot = false;

    std::vector<std::size_t> batch;
    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        double acc = 0.0;
        for (std::size_t at = 0; at < order.size(); at += cfg.batch_size) {
            const std::size_t m = std::min(cfg.batch_size, order.size() - at);
            batch.assign(order.begin() + at, order.begin() + at + m);
            const double loss = prob.step(batch);
            if (!std::isfinite(loss)) {
                throw NumericError(epoch + 1, static_cast<long>(at / cfg.batch_size) + 1,
                                   current_lr, "non-finite training loss");
            }
            acc += loss * static_cast<double>(m);
        }
        const double train_loss = acc / static_cast<double>(order.size());
        trace.train_loss.push_back(train_loss);
        trace.lr.push_back(current_lr);

        double monitored = train_loss;
        double val = std::numeric_limits<double>::quiet_NaN();
        if (cfg.have_val) {
            const double vl = prob.val_loss();
            if (!std::isfinite(vl)) {
                throw NumericError(epoch + 1, -1, current_lr, "non-finite validation loss");
            }
            trace.val_loss.push_back(vl);
            monitored = vl;
            val = vl;
        }
        if (cfg.epoch_log) cfg.epoch_log(EpochLog{epoch + 1, train_loss, val, current_lr});

        if (early) {
            if (monitored < best_val) {
                best_val = monitored;
                trace.best_epoch = epoch;
                prob.snapshot();
                have_snapshot = true;
                bad_epochs = 0;
            } else if (++bad_epochs > cfg.early_stop_patience) {
                trace.stopped_early = true;
                break;
            }
        }
        if (sched) {
            const double nl = sched->step(monitored);
            if (nl != current_lr) {
                current_lr = nl;
                prob.set_lr(nl);
            }
        }
    }
    if (early && have_snapshot) prob.restore();
    trace.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return trace;
}

// Single-network training problem (one HST stage, or SAE pretraining).
class SingleProblem {
public:
    SingleProblem(nn::Network<float>& net, nn::LossKind loss, nn::Tensor<float> X,
                  nn::Tensor<float> Y, std::optional<nn::Tensor<float>> Xv,
                  std::optional<nn::Tensor<float>> Yv, const nn::AdamConfig& opt)
        : net_(net),
          loss_(loss),
          X_(std::move(X)),
          Y_(std::move(Y)),
          Xv_(std::move(Xv)),
          Yv_(std::move(Yv)),
          adam_(nn::AdamState<float>::init(net, opt)) {}

    std::size_t train_count() const { return X_.shape[0]; }

    double step(const std::vector<std::size_t>& idx) {
        const auto xb = nn::gather_rows(X_, idx);
        const auto yb = nn::gather_rows(Y_, idx);
        const auto acts = nn::forward(net_, xb);
        const auto res = nn::loss_eval(loss_, acts.back(), yb);
        if (!std::isfinite(res.value)) return res.value;
        const auto grads = nn::backward(net_, acts, res.grad);
        nn::adam_step(adam_, net_, grads);
        return res.value;
    }

    double val_loss() const { return net_loss(net_, loss_, *Xv_, *Yv_); }
    void set_lr(double lr) { adam_.cfg.learning_rate = lr; }
    void snapshot() { best_params_ = net_.params; }
    void restore() { net_.params = best_params_; }

private:
    nn::Network<float>& net_;
    nn::LossKind loss_;
    nn::Tensor<float> X_, Y_;
    std::optional<nn::Tensor<float>> Xv_, Yv_;
    nn::AdamState<float> adam_;
    std::vector<std::vector<nn::Tensor<float>>> best_params_;
};

// Trunk + weighted heads (reference models). Zero-weight heads are left out
// of `active_` so they contribute neither loss nor gradients.
class MultiHeadProblem {
public:
    struct HeadState {
        nn::Network<float>* net = nullptr;
        nn::LossKind loss = nn::LossKind::Mse;
        double weight = 1.0;
        nn::Tensor<float> Y;
        std::optional<nn::Tensor<float>> Yv;
        nn::AdamState<float> adam;
    };

    MultiHeadProblem(nn::Network<float>& trunk, nn::Tensor<float> X,
                     std::optional<nn::Tensor<float>> Xv, const nn::AdamConfig& opt)
        : trunk_(trunk),
          X_(std::move(X)),
          Xv_(std::move(Xv)),
          trunk_adam_(nn::AdamState<float>::init(trunk, opt)) {}

    void add_head(nn::Network<float>& net, nn::LossKind loss, double weight, nn::Tensor<float> Y,
                  std::optional<nn::Tensor<float>> Yv, const nn::AdamConfig& opt) {
        active_.push_back(HeadState{&net, loss, weight, std::move(Y), std::move(Yv),
                                    nn::AdamState<float>::init(net, opt)});
    }

    std::size_t train_count() const { return X_.shape[0]; }

    double step(const std::vector<std::size_t>& idx) {
        const auto xb = nn::gather_rows(X_, idx);
        const auto tacts = nn::forward(trunk_, xb);
        const auto& tout = tacts.back();
        nn::Tensor<float> gsum(tout.shape);
        double total = 0.0;
        for (auto& h : active_) {
            const auto yb = nn::gather_rows(h.Y, idx);
            const auto hacts = nn::forward(*h.net, tout);
            auto res = nn::loss_eval(h.loss, hacts.back(), yb);
            total += h.weight * res.value;
            if (h.weight != 1.0) {
                for (auto& g : res.grad.data) g = static_cast<float>(g * h.weight);
            }
            nn::Tensor<float> gin;
            const auto hgrads = nn::backward(*h.net, hacts, res.grad, &gin);
            nn::adam_step(h.adam, *h.net, hgrads);
            for (std::size_t i = 0; i < gsum.size(); ++i) gsum.data[i] += gin.data[i];
        }
        if (!std::isfinite(total)) return total;
        const auto tgrads = nn::backward(trunk_, tacts, gsum);
        nn::adam_step(trunk_adam_, trunk_, tgrads);
        return total;
    }

    double val_loss() const {
        const std::size_t n = Xv_->shape[0];
        double acc = 0.0;
        std::vector<std::size_t> idx;
        for (std::size_t at = 0; at < n; at += kEvalChunk) {
            const std::size_t m = std::min(kEvalChunk, n - at);
            idx.resize(m);
            std::iota(idx.begin(), idx.end(), at);
            const auto xb = nn::gather_rows(*Xv_, idx);
            const auto tacts = nn::forward(trunk_, xb);
            double chunk = 0.0;
            for (const auto& h : active_) {
                const auto yb = nn::gather_rows(*h.Yv, idx);
                const auto hacts = nn::forward(*h.net, tacts.back());
                chunk += h.weight * nn::loss_eval(h.loss, hacts.back(), yb).value;
            }
            acc += chunk * static_cast<double>(m);
        }
        return acc / static_cast<double>(n);
    }

    void set_lr(double lr) {
        trunk_adam_.cfg.learning_rate = lr;
        for (auto& h : active_) h.adam.cfg.learning_rate = lr;
    }

    void snapshot() {
        best_trunk_ = trunk_.params;
        best_heads_.clear();
        for (const auto& h : active_) best_heads_.push_back(h.net->params);
    }

    void restore() {
        trunk_.params = best_trunk_;
        for (std::size_t i = 0; i < active_.size(); ++i) active_[i].net->params = best_heads_[i];
    }

private:
    nn::Network<float>& trunk_;
    nn::Tensor<float> X_;
    std::optional<nn::Tensor<float>> Xv_;
    nn::AdamState<float> trunk_adam_;
    std::vector<HeadState> active_;
    std::vector<std::vector<nn::Tensor<float>>> best_trunk_;
    std::vector<std::vector<std::vector<nn::Tensor<float>>>> best_heads_;
};

std::vector<nn::Tensor<float>> random_block_tensors(const nn::Network<float>& net,
                                                    const nn::BlockDef& b, std::uint64_t seed) {
    std::vector<nn::Tensor<float>> out;
    for (std::size_t i = b.first_layer; i <= b.last_layer; ++i) {
        if (nn::has_params(net.layers[i])) {
            auto ps = nn::init_params<float>(net.layers[i], derive_seed(seed, i));
            out.insert(out.end(), std::make_move_iterator(ps.begin()),
                       std::make_move_iterator(ps.end()));
        }
    }
    return out;
}

std::vector<std::vector<std::size_t>> shapes_of(const std::vector<nn::Tensor<float>>& ts) {
    std::vector<std::vector<std::size_t>> out;
    out.reserve(ts.size());
    for (const auto& t : ts) out.push_back(t.shape);
    return out;
}

// Shared scaffolding: hold out a validation split when early stopping is
// configured; fall back (with a warning) when the split degenerates.
struct StageData {
    data::Dataset train, val;
    bool have_val = false;
};

StageData prepare_stage_data(const data::Dataset& full, const std::optional<EarlyStopConfig>& es,
                             std::uint64_t seed, std::vector<std::string>& warnings) {
    StageData sd;
    if (!es) {
        sd.train = full;
        return sd;
    }
    auto [tr, va] = data::split_train_val(full, es->val_fraction, derive_seed(seed, 0x5917u),
                                          &warnings);
    if (tr.count() == 0) {
        throw ConfigError("validation fraction " + std::to_string(es->val_fraction) +
                          " leaves no training records");
    }
    if (va.count() == 0) {
        warnings.push_back("validation split is empty; early stopping disabled for this stage");
        sd.train = full;
        return sd;
    }
    sd.train = std::move(tr);
    sd.val = std::move(va);
    sd.have_val = true;
    return sd;
}

void check_sample_counts(const data::Dataset* data, const std::string& what,
                         std::vector<std::string>& issues) {
    if (!data) {
        issues.push_back(what + ": no dataset attached");
    } else if (data->count() == 0) {
        issues.push_back(what + ": dataset is empty");
    }
}

void check_loop_settings(const std::string& what, std::size_t batch_size, int max_epochs,
                         const nn::AdamConfig& opt, const std::optional<nn::PlateauConfig>& sched,
                         const std::optional<EarlyStopConfig>& es,
                         std::vector<std::string>& issues) {
    if (batch_size == 0) issues.push_back(what + ": batch size must be >= 1");
    if (max_epochs < 0) issues.push_back(what + ": negative epoch budget");
    if (!(opt.learning_rate > 0.0)) issues.push_back(what + ": learning rate must be > 0");
    if (sched && (!(sched->factor > 0.0) || sched->factor > 1.0)) {
        issues.push_back(what + ": scheduler factor must be in (0, 1]");
    }
    if (sched && sched->patience < 0) issues.push_back(what + ": negative scheduler patience");
    if (es) {
        if (es->patience < 0) issues.push_back(what + ": negative early-stop patience");
        if (!(es->val_fraction > 0.0) || !(es->val_fraction < 1.0)) {
            issues.push_back(what + ": validation fraction must be in (0, 1)");
        }
    }
}

}  // namespace

nn::Tensor<float> stage_targets(const data::Dataset& d, TargetKind kind) {
    switch (kind) {
        case TargetKind::OneHotConcat: return d.one_hot_concat();
        case TargetKind::OneHotBuilding: return d.one_hot_building();
        case TargetKind::OneHotFloor: return d.one_hot_floor();
        case TargetKind::Coords2D: return d.scaled_coords();
        case TargetKind::Reconstruction: return d.features_tensor();
    }
    throw Error("unknown target kind");
}

void validate_plans(const std::vector<StagePlan>& plans) {
    std::vector<std::string> issues;
    if (plans.empty()) issues.push_back("no stages in schedule");
    for (std::size_t i = 0; i < plans.size(); ++i) {
        const StagePlan& p = plans[i];
        const std::string what = "stage " + std::to_string(p.stage) +
                                 (p.name.empty() ? "" : " (" + p.name + ")");
        if (p.stage != static_cast<int>(i) + 1) {
            issues.push_back(what + ": expected stage index " + std::to_string(i + 1));
        }
        check_loop_settings(what, p.batch_size, p.max_epochs, p.optimizer, p.scheduler,
                            p.early_stop, issues);
        check_sample_counts(p.data, what, issues);

        std::set<std::string> ruled;
        for (const auto& [sym, rule] : p.init_rules) {
            if (!p.net.has_block(sym)) {
                issues.push_back(what + ": init rule for unknown block " + sym);
                continue;
            }
            if (!ruled.insert(sym).second) {
                issues.push_back(what + ": duplicate init rule for block " + sym);
                continue;
            }
            if (const auto* lc = std::get_if<LinkedCopyInit>(&rule)) {
                if (i == 0) {
                    issues.push_back(what + ": block " + sym +
                                     " uses LinkedCopy at stage 1 (no prior stage)");
                } else if (!plans[i - 1].net.has_block(lc->source_symbol)) {
                    issues.push_back(what + ": LinkedCopy source " + lc->source_symbol +
                                     " not found in stage " + std::to_string(p.stage - 1));
                } else if (plans[i - 1].net.block_shapes(lc->source_symbol) !=
                           p.net.block_shapes(sym)) {
                    issues.push_back(what + ": linked blocks " + lc->source_symbol + " -> " + sym +
                                     " have different shape lists");
                }
            }
        }
        for (const auto& b : p.net.blocks) {
            if (!ruled.count(b.symbol)) {
                issues.push_back(what + ": block " + b.symbol + " has no init rule");
            }
        }
        if (p.data && p.data->count() > 0) {
            if (p.net.input_shape != std::vector<std::size_t>{p.data->width}) {
                issues.push_back(what + ": network input shape " +
                                 nn::shape_str(p.net.input_shape) + " does not match feature width " +
                                 std::to_string(p.data->width));
            }
            const auto out = p.net.output_width();
            const std::size_t want = target_width(*p.data, p.target);
            if (out.size() != 1 || out[0] != want) {
                issues.push_back(what + ": network output " + nn::shape_str(out) +
                                 " does not match target width " + std::to_string(want));
            }
        }
    }
    if (!issues.empty()) {
        std::string msg = "invalid stage schedule:";
        for (const auto& s : issues) msg += "\n  - " + s;
        throw ConfigError(msg);
    }
}

io::BlockWeights resolve_init(const StagePlan& plan, const std::vector<StageResult>& prior) {
    io::BlockWeights out;
    for (const auto& b : plan.net.blocks) {
        const InitRule* rule = nullptr;
        for (const auto& [sym, r] : plan.init_rules) {
            if (sym == b.symbol) {
                rule = &r;
                break;
            }
        }
        if (!rule) throw ConfigError("block " + b.symbol + " has no init rule");

        if (const auto* rnd = std::get_if<RandomInit>(rule)) {
            out[b.symbol] = random_block_tensors(plan.net, b, rnd->seed);
        } else if (const auto* pre = std::get_if<PretrainedInit>(rule)) {
            const io::WeightsArchive archive = io::load_weights_archive(pre->archive_path);
            const auto it = archive.blocks.find(pre->symbol);
            if (it == archive.blocks.end()) {
                throw DataError(pre->archive_path, -1,
                                "archive has no block named " + pre->symbol);
            }
            if (shapes_of(it->second) != plan.net.block_shapes(b.symbol)) {
                throw ShapeError("pretrained block " + pre->symbol +
                                 " does not match the shapes of block " + b.symbol);
            }
            out[b.symbol] = it->second;
        } else {
            const auto& lc = std::get<LinkedCopyInit>(*rule);
            const StageResult* src = nullptr;
            for (const auto& r : prior) {
                if (r.stage == plan.stage - 1) src = &r;
            }
            if (!src) {
                throw ConfigError("block " + b.symbol + ": no stage " +
                                  std::to_string(plan.stage - 1) + " result to link from");
            }
            const auto it = src->weights.find(lc.source_symbol);
            if (it == src->weights.end()) {
                throw ConfigError("block " + b.symbol + ": stage " +
                                  std::to_string(src->stage) + " has no block " +
                                  lc.source_symbol);
            }
            if (shapes_of(it->second) != plan.net.block_shapes(b.symbol)) {
                throw ShapeError("linked blocks " + lc.source_symbol + " -> " + b.symbol +
                                 " have different shape lists");
            }
            out[b.symbol] = it->second;  // deep copy; source stays frozen
        }
    }
    return out;
}

StageResult train_stage(const StagePlan& plan, const io::BlockWeights& init) {
    if (!plan.data) throw ConfigError("stage " + std::to_string(plan.stage) + ": no dataset");
    if (plan.data->count() == 0) {
        throw DataError("stage " + std::to_string(plan.stage) + ": dataset is empty");
    }
    nn::Network<float> net = plan.net;
    for (const auto& b : net.blocks) {
        const auto it = init.find(b.symbol);
        if (it == init.end()) throw ConfigError("init set has no block " + b.symbol);
        net.set_block_tensors(b.symbol, it->second);
    }

    StageResult result;
    result.stage = plan.stage;
    result.name = plan.name;

    if (plan.max_epochs > 0) {
        const StageData sd =
            prepare_stage_data(*plan.data, plan.early_stop, plan.shuffle_seed, result.warnings);
        std::optional<nn::Tensor<float>> Xv, Yv;
        if (sd.have_val) {
            Xv = sd.val.features_tensor();
            Yv = stage_targets(sd.val, plan.target);
        }
        SingleProblem prob(net, plan.loss, sd.train.features_tensor(),
                           stage_targets(sd.train, plan.target), std::move(Xv), std::move(Yv),
                           plan.optimizer);
        LoopConfig cfg;
        cfg.max_epochs = plan.max_epochs;
        cfg.batch_size = plan.batch_size;
        cfg.shuffle_seed = plan.shuffle_seed;
        cfg.initial_lr = plan.optimizer.learning_rate;
        cfg.scheduler = plan.scheduler;
        cfg.early_stop_patience = plan.early_stop ? plan.early_stop->patience : -1;
        cfg.have_val = sd.have_val;
        cfg.epoch_log = plan.epoch_log;
        result.trace = run_loop(prob, cfg);
    }

    for (const auto& b : net.blocks) result.weights[b.symbol] = net.block_tensors(b.symbol);
    result.frozen = true;
    result.checksum = io::weights_checksum(result.weights);
    return result;
}

std::vector<StageResult> run_hst(const std::vector<StagePlan>& plans) {
    validate_plans(plans);
    std::vector<StageResult> results;
    for (const StagePlan& plan : plans) {
        const io::BlockWeights init = resolve_init(plan, results);
        results.push_back(train_stage(plan, init));
        // freeze check: earlier stages must be byte-identical after this one
        for (std::size_t i = 0; i + 1 < results.size(); ++i) {
            if (io::weights_checksum(results[i].weights) != results[i].checksum) {
                throw Error("frozen stage " + std::to_string(results[i].stage) +
                            " changed during stage " + std::to_string(plan.stage));
            }
        }
    }
    return results;
}

StageResult train_reference(const ReferencePlan& plan) {
    std::vector<std::string> issues;
    check_loop_settings(plan.name.empty() ? "reference" : plan.name, plan.batch_size,
                        plan.max_epochs, plan.optimizer, plan.scheduler, plan.early_stop, issues);
    check_sample_counts(plan.data, plan.name.empty() ? "reference" : plan.name, issues);
    std::set<std::string> symbols;
    for (const auto& b : plan.trunk.blocks) {
        if (!symbols.insert(b.symbol).second) issues.push_back("duplicate block " + b.symbol);
    }
    for (const auto& h : plan.heads) {
        if (h.weight < 0.0) issues.push_back("head " + h.name + ": negative loss weight");
        for (const auto& b : h.net.blocks) {
            if (!symbols.insert(b.symbol).second) issues.push_back("duplicate block " + b.symbol);
        }
    }
    if (plan.heads.empty()) issues.push_back("reference model has no heads");
    if (!issues.empty()) {
        std::string msg = "invalid reference plan:";
        for (const auto& s : issues) msg += "\n  - " + s;
        throw ConfigError(msg);
    }

    nn::Network<float> trunk = plan.trunk;
    std::vector<nn::Network<float>> heads;
    heads.reserve(plan.heads.size());
    for (const auto& h : plan.heads) heads.push_back(h.net);

    StageResult result;
    result.stage = 1;
    result.name = plan.name;

    if (plan.max_epochs > 0) {
        const StageData sd =
            prepare_stage_data(*plan.data, plan.early_stop, plan.shuffle_seed, result.warnings);
        std::optional<nn::Tensor<float>> Xv;
        if (sd.have_val) Xv = sd.val.features_tensor();
        MultiHeadProblem prob(trunk, sd.train.features_tensor(), std::move(Xv), plan.optimizer);
        for (std::size_t i = 0; i < plan.heads.size(); ++i) {
            const HeadPlan& h = plan.heads[i];
            if (h.weight == 0.0) continue;  // single-task reduction: head untouched
            std::optional<nn::Tensor<float>> Yv;
            if (sd.have_val) Yv = stage_targets(sd.val, h.target);
            prob.add_head(heads[i], h.loss, h.weight, stage_targets(sd.train, h.target),
                          std::move(Yv), plan.optimizer);
        }
        LoopConfig cfg;
        cfg.max_epochs = plan.max_epochs;
        cfg.batch_size = plan.batch_size;
        cfg.shuffle_seed = plan.shuffle_seed;
        cfg.initial_lr = plan.optimizer.learning_rate;
        cfg.scheduler = plan.scheduler;
        cfg.early_stop_patience = plan.early_stop ? plan.early_stop->patience : -1;
        cfg.have_val = sd.have_val;
        cfg.epoch_log = plan.epoch_log;
        result.trace = run_loop(prob, cfg);
    }

    for (const auto& b : trunk.blocks) result.weights[b.symbol] = trunk.block_tensors(b.symbol);
    for (const auto& h : heads) {
        for (const auto& b : h.blocks) result.weights[b.symbol] = h.block_tensors(b.symbol);
    }
    result.frozen = true;
    result.checksum = io::weights_checksum(result.weights);
    return result;
}

}  // namespace hst::train
