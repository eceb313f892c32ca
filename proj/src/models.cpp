#include "hst/models.hpp"

#include <algorithm>
#include <numeric>

#include "hst/errors.hpp"
#include "hst/rng.hpp"

namespace hst::model {
namespace {

void check_site_plan(const data::SitePlan& plan) {
    if (plan.num_buildings < 1 || plan.num_floors() < 1 ||
        static_cast<int>(plan.floors_per_building.size()) != plan.num_buildings) {
        throw ConfigError("incomplete site plan (buildings=" + std::to_string(plan.num_buildings) +
                          ", floor lists=" + std::to_string(plan.floors_per_building.size()) + ")");
    }
}

void check_sae_config(const SaeConfig& cfg) {
    if (cfg.input_width == 0) throw ConfigError("sae: input width must be >= 1");
    if (cfg.encoder_widths.empty()) throw ConfigError("sae: no encoder layers");
    for (std::size_t w : cfg.encoder_widths) {
        if (w == 0) throw ConfigError("sae: zero encoder width");
    }
}

void add_encoder(nn::NetworkBuilder<float>& b, const SaeConfig& cfg, const std::string& symbol) {
    b.begin_block(symbol);
    for (std::size_t w : cfg.encoder_widths) b.dense(w).activation(nn::Act::Elu);
}

void add_conv_stack(nn::NetworkBuilder<float>& b, const CnnConfig& cfg, const std::string& symbol) {
    if (cfg.conv.empty()) throw ConfigError("cnn: empty conv stack");
    b.begin_block(symbol).reshape1d(1);
    for (const auto& c : cfg.conv) b.conv1d(c.channels, c.kernel).activation(nn::Act::Elu);
    b.flatten();
}

// Per-stage substream constants keep builder/init/shuffle seeds independent.
std::uint64_t stage_seed(std::uint64_t seed, int stage) { return derive_seed(seed, 0xb0 + stage); }
std::uint64_t rule_seed(std::uint64_t seed, int stage, int block) {
    return derive_seed(seed, static_cast<std::uint64_t>(stage), 0xc0 + block);
}
std::uint64_t shuffle_seed_of(std::uint64_t seed, int stage) {
    return derive_seed(seed, 0x40 + stage);
}

train::InitRule encoder_rule(const std::optional<std::string>& sae_archive, std::uint64_t seed,
                             int stage) {
    if (sae_archive) return train::PretrainedInit{*sae_archive, "ENC"};
    return train::RandomInit{rule_seed(seed, stage, 0)};
}

void apply_weights(nn::Network<float>& net, const io::BlockWeights& weights) {
    for (const auto& b : net.blocks) {
        const auto it = weights.find(b.symbol);
        if (it == weights.end()) throw ConfigError("weight set has no block " + b.symbol);
        net.set_block_tensors(b.symbol, it->second);
    }
}

std::size_t argmax_range(const float* p, std::size_t n) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < n; ++i) {
        if (p[i] > p[best]) best = i;
    }
    return best;
}

const nn::Network<float>& head_net(const ReferenceModel& rm, const std::string& name) {
    for (const auto& h : rm.heads) {
        if (h.name == name) return h.net;
    }
    throw ConfigError("reference model has no head named " + name);
}

}  // namespace

const char* model_kind_name(ModelKind kind) {
    switch (kind) {
        case ModelKind::LinkedDnn: return "linked-dnn";
        case ModelKind::ReferenceDnn: return "reference-dnn";
        case ModelKind::LinkedCnnloc: return "linked-cnnloc";
        case ModelKind::ReferenceCnnloc: return "reference-cnnloc";
    }
    return "?";
}

ModelKind model_kind_from(const std::string& name) {
    if (name == "linked-dnn") return ModelKind::LinkedDnn;
    if (name == "reference-dnn") return ModelKind::ReferenceDnn;
    if (name == "linked-cnnloc") return ModelKind::LinkedCnnloc;
    if (name == "reference-cnnloc") return ModelKind::ReferenceCnnloc;
    throw ConfigError("unknown model kind \"" + name +
                      "\" (expected linked-dnn, reference-dnn, linked-cnnloc or reference-cnnloc)");
}

int num_stages(ModelKind kind) {
    switch (kind) {
        case ModelKind::LinkedDnn: return 2;
        case ModelKind::LinkedCnnloc: return 3;
        case ModelKind::ReferenceDnn:
        case ModelKind::ReferenceCnnloc: return 1;
    }
    return 0;
}

nn::Network<float> build_sae(const SaeConfig& cfg, std::uint64_t seed) {
    check_sae_config(cfg);
    nn::NetworkBuilder<float> b({cfg.input_width}, seed);
    add_encoder(b, cfg, "ENC");
    b.begin_block("DEC");
    std::vector<std::size_t> dec;
    for (std::size_t i = cfg.encoder_widths.size() - 1; i-- > 0;) {
        dec.push_back(cfg.encoder_widths[i]);
    }
    if (dec.empty() || dec.back() != cfg.input_width) dec.push_back(cfg.input_width);
    for (std::size_t i = 0; i < dec.size(); ++i) {
        b.dense(dec[i]);
        if (i + 1 < dec.size()) b.activation(nn::Act::Elu);  // output stays linear
    }
    return b.finish();
}

nn::Network<float> build_linked_dnn(const DnnConfig& cfg, const data::SitePlan& plan,
                                    DnnStage stage, std::uint64_t seed) {
    check_sae_config(cfg.sae);
    check_site_plan(plan);
    const bool first = stage == DnnStage::Stage1;
    nn::NetworkBuilder<float> b({cfg.sae.input_width}, seed);
    add_encoder(b, cfg.sae, first ? "E_BF" : "E_L");
    b.begin_block(first ? "H_BF" : "H_L");
    for (std::size_t w : cfg.common_widths) b.dense(w).activation(nn::Act::Elu);
    if (first) {
        b.begin_block("C")
            .dense(static_cast<std::size_t>(plan.label_width()))
            .activation(nn::Act::Sigmoid);
    } else {
        b.begin_block("R").dense(cfg.location_hidden).activation(nn::Act::Tanh).dense(2);
    }
    return b.finish();
}

nn::Network<float> build_linked_cnnloc(const CnnConfig& cfg, const data::SitePlan& plan,
                                       CnnStage stage, std::uint64_t seed) {
    check_sae_config(cfg.sae);
    check_site_plan(plan);
    nn::NetworkBuilder<float> b({cfg.sae.input_width}, seed);
    switch (stage) {
        case CnnStage::Stage1:
            add_encoder(b, cfg.sae, "E_B");
            b.begin_block("B");
            for (std::size_t w : cfg.building_hidden) b.dense(w).activation(nn::Act::Elu);
            b.dense(static_cast<std::size_t>(plan.num_buildings)).activation(nn::Act::Softmax);
            break;
        case CnnStage::Stage2:
            add_encoder(b, cfg.sae, "E_F");
            add_conv_stack(b, cfg, "C_F");
            b.begin_block("H_F")
                .dense(static_cast<std::size_t>(plan.num_floors()))
                .activation(nn::Act::Softmax);
            break;
        case CnnStage::Stage3:
            add_encoder(b, cfg.sae, "E_L");
            add_conv_stack(b, cfg, "C_L");
            b.begin_block("H_L").dense(2);
            break;
    }
    return b.finish();
}

ReferenceModel build_reference_dnn(const DnnConfig& cfg, const data::SitePlan& plan,
                                   std::uint64_t seed) {
    check_sae_config(cfg.sae);
    check_site_plan(plan);
    ReferenceModel rm;
    {
        nn::NetworkBuilder<float> b({cfg.sae.input_width}, derive_seed(seed, 0xb0u));
        add_encoder(b, cfg.sae, "E");
        b.begin_block("H");
        for (std::size_t w : cfg.common_widths) b.dense(w).activation(nn::Act::Elu);
        rm.trunk = b.finish();
    }
    const std::size_t trunk_out = rm.trunk.output_width()[0];
    {
        nn::NetworkBuilder<float> b({trunk_out}, derive_seed(seed, 0xb1u));
        b.begin_block("C")
            .dense(static_cast<std::size_t>(plan.label_width()))
            .activation(nn::Act::Sigmoid);
        rm.heads.push_back(train::HeadPlan{"building_floor", b.finish(),
                                           train::TargetKind::OneHotConcat, nn::LossKind::Bce,
                                           1.0});
    }
    {
        nn::NetworkBuilder<float> b({trunk_out}, derive_seed(seed, 0xb2u));
        b.begin_block("R").dense(cfg.location_hidden).activation(nn::Act::Tanh).dense(2);
        rm.heads.push_back(train::HeadPlan{"location", b.finish(), train::TargetKind::Coords2D,
                                           nn::LossKind::Mse, 1.0});
    }
    return rm;
}

ReferenceModel build_reference_cnnloc(const CnnConfig& cfg, const data::SitePlan& plan,
                                      std::uint64_t seed) {
    check_sae_config(cfg.sae);
    check_site_plan(plan);
    ReferenceModel rm;
    {
        nn::NetworkBuilder<float> b({cfg.sae.input_width}, derive_seed(seed, 0xb0u));
        add_encoder(b, cfg.sae, "E");
        rm.trunk = b.finish();
    }
    const std::size_t trunk_out = rm.trunk.output_width()[0];
    {
        nn::NetworkBuilder<float> b({trunk_out}, derive_seed(seed, 0xb1u));
        b.begin_block("B");
        for (std::size_t w : cfg.building_hidden) b.dense(w).activation(nn::Act::Elu);
        b.dense(static_cast<std::size_t>(plan.num_buildings)).activation(nn::Act::Softmax);
        rm.heads.push_back(train::HeadPlan{"building", b.finish(),
                                           train::TargetKind::OneHotBuilding, nn::LossKind::Ce,
                                           1.0});
    }
    {
        nn::NetworkBuilder<float> b({trunk_out}, derive_seed(seed, 0xb2u));
        add_conv_stack(b, cfg, "F");
        b.dense(static_cast<std::size_t>(plan.num_floors())).activation(nn::Act::Softmax);
        rm.heads.push_back(train::HeadPlan{"floor", b.finish(), train::TargetKind::OneHotFloor,
                                           nn::LossKind::Ce, 1.0});
    }
    {
        nn::NetworkBuilder<float> b({trunk_out}, derive_seed(seed, 0xb3u));
        add_conv_stack(b, cfg, "L");
        b.dense(2);
        rm.heads.push_back(train::HeadPlan{"location", b.finish(), train::TargetKind::Coords2D,
                                           nn::LossKind::Mse, 1.0});
    }
    return rm;
}

std::vector<train::StagePlan> linked_dnn_schedule(const DnnConfig& cfg,
                                                  const data::Dataset& train_data,
                                                  const StageHyper& stage1,
                                                  const StageHyper& stage2,
                                                  const std::optional<std::string>& sae_archive,
                                                  std::uint64_t seed) {
    std::vector<train::StagePlan> plans(2);

    plans[0].stage = 1;
    plans[0].name = "building-floor";
    plans[0].net = build_linked_dnn(cfg, train_data.plan, DnnStage::Stage1, stage_seed(seed, 1));
    plans[0].init_rules = {{"E_BF", encoder_rule(sae_archive, seed, 1)},
                           {"H_BF", train::RandomInit{rule_seed(seed, 1, 1)}},
                           {"C", train::RandomInit{rule_seed(seed, 1, 2)}}};
    plans[0].data = &train_data;
    plans[0].target = train::TargetKind::OneHotConcat;
    plans[0].loss = nn::LossKind::Bce;
    plans[0].optimizer = stage1.optimizer;
    plans[0].scheduler = stage1.scheduler;
    plans[0].max_epochs = stage1.max_epochs;
    plans[0].batch_size = stage1.batch_size;
    plans[0].early_stop = stage1.early_stop;
    plans[0].shuffle_seed = shuffle_seed_of(seed, 1);

    plans[1].stage = 2;
    plans[1].name = "location";
    plans[1].net = build_linked_dnn(cfg, train_data.plan, DnnStage::Stage2, stage_seed(seed, 2));
    plans[1].init_rules = {{"E_L", train::LinkedCopyInit{"E_BF"}},
                           {"H_L", train::LinkedCopyInit{"H_BF"}},
                           {"R", train::RandomInit{rule_seed(seed, 2, 2)}}};
    plans[1].data = &train_data;
    plans[1].target = train::TargetKind::Coords2D;
    plans[1].loss = nn::LossKind::Mse;
    plans[1].optimizer = stage2.optimizer;
    plans[1].scheduler = stage2.scheduler;
    plans[1].max_epochs = stage2.max_epochs;
    plans[1].batch_size = stage2.batch_size;
    plans[1].early_stop = stage2.early_stop;
    plans[1].shuffle_seed = shuffle_seed_of(seed, 2);

    return plans;
}

std::vector<train::StagePlan> linked_cnnloc_schedule(const CnnConfig& cfg,
                                                     const data::Dataset& train_data,
                                                     const StageHyper& stage1,
                                                     const StageHyper& stage2,
                                                     const StageHyper& stage3,
                                                     const std::optional<std::string>& sae_archive,
                                                     std::uint64_t seed) {
    std::vector<train::StagePlan> plans(3);
    const StageHyper* hyper[3] = {&stage1, &stage2, &stage3};
    for (int s = 1; s <= 3; ++s) {
        train::StagePlan& p = plans[s - 1];
        p.stage = s;
        p.net = build_linked_cnnloc(cfg, train_data.plan, static_cast<CnnStage>(s - 1),
                                    stage_seed(seed, s));
        p.data = &train_data;
        p.optimizer = hyper[s - 1]->optimizer;
        p.scheduler = hyper[s - 1]->scheduler;
        p.max_epochs = hyper[s - 1]->max_epochs;
        p.batch_size = hyper[s - 1]->batch_size;
        p.early_stop = hyper[s - 1]->early_stop;
        p.shuffle_seed = shuffle_seed_of(seed, s);
    }
    plans[0].name = "building";
    plans[0].init_rules = {{"E_B", encoder_rule(sae_archive, seed, 1)},
                           {"B", train::RandomInit{rule_seed(seed, 1, 1)}}};
    plans[0].target = train::TargetKind::OneHotBuilding;
    plans[0].loss = nn::LossKind::Ce;

    plans[1].name = "floor";
    plans[1].init_rules = {{"E_F", train::LinkedCopyInit{"E_B"}},
                           {"C_F", train::RandomInit{rule_seed(seed, 2, 1)}},
                           {"H_F", train::RandomInit{rule_seed(seed, 2, 2)}}};
    plans[1].target = train::TargetKind::OneHotFloor;
    plans[1].loss = nn::LossKind::Ce;

    plans[2].name = "location";
    plans[2].init_rules = {{"E_L", train::LinkedCopyInit{"E_F"}},
                           {"C_L", train::LinkedCopyInit{"C_F"}},
                           {"H_L", train::RandomInit{rule_seed(seed, 3, 2)}}};
    plans[2].target = train::TargetKind::Coords2D;
    plans[2].loss = nn::LossKind::Mse;

    return plans;
}

train::ReferencePlan reference_dnn_plan(const DnnConfig& cfg, const data::Dataset& train_data,
                                        const StageHyper& hyper, std::uint64_t seed) {
    ReferenceModel rm = build_reference_dnn(cfg, train_data.plan, seed);
    train::ReferencePlan plan;
    plan.name = "reference-dnn";
    plan.trunk = std::move(rm.trunk);
    plan.heads = std::move(rm.heads);
    plan.data = &train_data;
    plan.optimizer = hyper.optimizer;
    plan.scheduler = hyper.scheduler;
    plan.max_epochs = hyper.max_epochs;
    plan.batch_size = hyper.batch_size;
    plan.early_stop = hyper.early_stop;
    plan.shuffle_seed = shuffle_seed_of(seed, 1);
    return plan;
}

train::ReferencePlan reference_cnnloc_plan(const CnnConfig& cfg, const data::Dataset& train_data,
                                           const StageHyper& hyper, std::uint64_t seed) {
    ReferenceModel rm = build_reference_cnnloc(cfg, train_data.plan, seed);
    train::ReferencePlan plan;
    plan.name = "reference-cnnloc";
    plan.trunk = std::move(rm.trunk);
    plan.heads = std::move(rm.heads);
    plan.data = &train_data;
    plan.optimizer = hyper.optimizer;
    plan.scheduler = hyper.scheduler;
    plan.max_epochs = hyper.max_epochs;
    plan.batch_size = hyper.batch_size;
    plan.early_stop = hyper.early_stop;
    plan.shuffle_seed = shuffle_seed_of(seed, 1);
    return plan;
}

void apply_pretrained_encoder(train::ReferencePlan& plan, const std::string& sae_archive) {
    const io::WeightsArchive archive = io::load_weights_archive(sae_archive);
    const auto it = archive.blocks.find("ENC");
    if (it == archive.blocks.end()) {
        throw DataError(sae_archive, -1, "archive has no block named ENC");
    }
    plan.trunk.set_block_tensors("E", it->second);
}

train::StageResult pretrain_sae(const SaeConfig& cfg, const data::Dataset& train_data,
                                const StageHyper& hyper, std::uint64_t seed) {
    train::StagePlan plan;
    plan.stage = 0;  // pretraining artifact, not an HST stage
    plan.name = "sae";
    plan.net = build_sae(cfg, stage_seed(seed, 0));
    plan.init_rules = {{"ENC", train::RandomInit{rule_seed(seed, 0, 0)}},
                       {"DEC", train::RandomInit{rule_seed(seed, 0, 1)}}};
    plan.data = &train_data;
    plan.target = train::TargetKind::Reconstruction;
    plan.loss = nn::LossKind::Mse;
    plan.optimizer = hyper.optimizer;
    plan.scheduler = hyper.scheduler;
    plan.max_epochs = hyper.max_epochs;
    plan.batch_size = hyper.batch_size;
    plan.early_stop = hyper.early_stop;
    plan.shuffle_seed = shuffle_seed_of(seed, 0);

    train::StageResult res = train::train_stage(plan, train::resolve_init(plan, {}));
    res.weights.erase("DEC");  // encoder only
    res.checksum = io::weights_checksum(res.weights);
    return res;
}

ModelBundle make_bundle(ModelKind kind, const DnnConfig& dnn, const CnnConfig& cnn,
                        const data::SitePlan& plan, const data::ScalerParams& scaler,
                        const std::vector<io::BlockWeights>& stage_weights) {
    ModelBundle bundle;
    bundle.kind = kind;
    bundle.plan = plan;
    bundle.scaler = scaler;
    const std::size_t want = static_cast<std::size_t>(num_stages(kind));
    if (stage_weights.size() != want) {
        throw ConfigError(std::string(model_kind_name(kind)) + " takes " + std::to_string(want) +
                          " weight sets, got " + std::to_string(stage_weights.size()));
    }
    switch (kind) {
        case ModelKind::LinkedDnn:
            bundle.stage_nets.push_back(build_linked_dnn(dnn, plan, DnnStage::Stage1, 0));
            bundle.stage_nets.push_back(build_linked_dnn(dnn, plan, DnnStage::Stage2, 0));
            break;
        case ModelKind::LinkedCnnloc:
            bundle.stage_nets.push_back(build_linked_cnnloc(cnn, plan, CnnStage::Stage1, 0));
            bundle.stage_nets.push_back(build_linked_cnnloc(cnn, plan, CnnStage::Stage2, 0));
            bundle.stage_nets.push_back(build_linked_cnnloc(cnn, plan, CnnStage::Stage3, 0));
            break;
        case ModelKind::ReferenceDnn: bundle.reference = build_reference_dnn(dnn, plan, 0); break;
        case ModelKind::ReferenceCnnloc:
            bundle.reference = build_reference_cnnloc(cnn, plan, 0);
            break;
    }
    if (bundle.reference) {
        apply_weights(bundle.reference->trunk, stage_weights[0]);
        for (auto& h : bundle.reference->heads) apply_weights(h.net, stage_weights[0]);
    } else {
        for (std::size_t s = 0; s < bundle.stage_nets.size(); ++s) {
            apply_weights(bundle.stage_nets[s], stage_weights[s]);
        }
    }
    return bundle;
}

std::vector<data::Prediction> predict(const ModelBundle& bundle, const nn::Tensor<float>& X) {
    if (X.rank() != 2) throw ShapeError("predict expects a (records, width) batch");
    const std::size_t n = X.shape[0];
    const int nb = bundle.plan.num_buildings;
    const int nf = bundle.plan.num_floors();
    std::vector<data::Prediction> out(n);

    constexpr std::size_t kChunk = 256;
    std::vector<std::size_t> idx;
    for (std::size_t at = 0; at < n; at += kChunk) {
        const std::size_t m = std::min(kChunk, n - at);
        idx.resize(m);
        std::iota(idx.begin(), idx.end(), at);
        const auto xb = nn::gather_rows(X, idx);

        nn::Tensor<float> bld, flr, cls, loc;
        switch (bundle.kind) {
            case ModelKind::LinkedDnn:
                cls = nn::forward(bundle.stage_nets[0], xb).back();
                loc = nn::forward(bundle.stage_nets[1], xb).back();
                break;
            case ModelKind::LinkedCnnloc:
                bld = nn::forward(bundle.stage_nets[0], xb).back();
                flr = nn::forward(bundle.stage_nets[1], xb).back();
                loc = nn::forward(bundle.stage_nets[2], xb).back();
                break;
            case ModelKind::ReferenceDnn: {
                const auto t = nn::forward(bundle.reference->trunk, xb).back();
                cls = nn::forward(head_net(*bundle.reference, "building_floor"), t).back();
                loc = nn::forward(head_net(*bundle.reference, "location"), t).back();
                break;
            }
            case ModelKind::ReferenceCnnloc: {
                const auto t = nn::forward(bundle.reference->trunk, xb).back();
                bld = nn::forward(head_net(*bundle.reference, "building"), t).back();
                flr = nn::forward(head_net(*bundle.reference, "floor"), t).back();
                loc = nn::forward(head_net(*bundle.reference, "location"), t).back();
                break;
            }
        }

        for (std::size_t r = 0; r < m; ++r) {
            data::Prediction& p = out[at + r];
            if (cls.size() > 0) {
                const float* row = cls.data.data() + r * cls.shape[1];
                p.building = static_cast<int>(argmax_range(row, static_cast<std::size_t>(nb)));
                p.floor = static_cast<int>(argmax_range(row + nb, static_cast<std::size_t>(nf)));
            } else {
                p.building = static_cast<int>(
                    argmax_range(bld.data.data() + r * bld.shape[1], bld.shape[1]));
                p.floor = static_cast<int>(
                    argmax_range(flr.data.data() + r * flr.shape[1], flr.shape[1]));
            }
            p.x_m = bundle.scaler.unscale_x(loc(r, 0));
            p.y_m = bundle.scaler.unscale_y(loc(r, 1));
        }
    }
    return out;
}

}  // namespace hst::model
