#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hst/dataset.hpp"
#include "hst/network.hpp"
#include "hst/stage.hpp"

namespace hst::model {

enum class ModelKind { LinkedDnn, ReferenceDnn, LinkedCnnloc, ReferenceCnnloc };

const char* model_kind_name(ModelKind kind);
ModelKind model_kind_from(const std::string& name);
int num_stages(ModelKind kind);  // 1 for reference kinds

// Autoencoder over scaled RSSI vectors; the decoder mirrors the encoder
// widths and ends linear.
struct SaeConfig {
    std::size_t input_width = 520;
    std::vector<std::size_t> encoder_widths = {520, 260, 130};
};

// Linked/reference DNN: SAE encoder, common ELU trunk, a joint sigmoid
// building+floor head and a tanh-hidden location head.
struct DnnConfig {
    SaeConfig sae;
    std::vector<std::size_t> common_widths = {520, 520};
    std::size_t location_hidden = 520;
};

// Linked/reference CNNLoc: SAE encoder, dense building head, and a 1-D conv
// stack feeding the floor and location heads.
struct CnnConfig {
    struct Conv {
        std::size_t channels = 0;
        std::size_t kernel = 0;
    };
    SaeConfig sae;
    std::vector<std::size_t> building_hidden = {130, 130};
    std::vector<Conv> conv = {{99, 22}, {66, 22}, {33, 22}};
};

enum class DnnStage { Stage1, Stage2 };
enum class CnnStage { Stage1, Stage2, Stage3 };

// blocks ENC (encoder) and DEC (decoder)
nn::Network<float> build_sae(const SaeConfig& cfg, std::uint64_t seed);

// Stage1 blocks {E_BF, H_BF, C}; Stage2 blocks {E_L, H_L, R}. The two stages
// agree on encoder/common shapes so their blocks can be linked.
nn::Network<float> build_linked_dnn(const DnnConfig& cfg, const data::SitePlan& plan,
                                    DnnStage stage, std::uint64_t seed);

// Stage1 {E_B, B}; Stage2 {E_F, C_F, H_F}; Stage3 {E_L, C_L, H_L}.
nn::Network<float> build_linked_cnnloc(const CnnConfig& cfg, const data::SitePlan& plan,
                                       CnnStage stage, std::uint64_t seed);

// Conventional (jointly trained) counterpart: a shared trunk plus loss-bearing
// heads, ready to drop into a train::ReferencePlan.
struct ReferenceModel {
    nn::Network<float> trunk;
    std::vector<train::HeadPlan> heads;
};

ReferenceModel build_reference_dnn(const DnnConfig& cfg, const data::SitePlan& plan,
                                   std::uint64_t seed);
ReferenceModel build_reference_cnnloc(const CnnConfig& cfg, const data::SitePlan& plan,
                                      std::uint64_t seed);

// Per-stage learning-loop settings (one per stage in a schedule).
struct StageHyper {
    nn::AdamConfig optimizer;
    std::optional<nn::PlateauConfig> scheduler;
    int max_epochs = 300;
    std::size_t batch_size = 24;
    std::optional<train::EarlyStopConfig> early_stop = train::EarlyStopConfig{};
};

// Full HST schedules with the paper's init wiring. `sae_archive`, when given,
// loads the stage-1 encoder from a pretrained SAE archive (block ENC);
// otherwise the encoder starts random.
std::vector<train::StagePlan> linked_dnn_schedule(const DnnConfig& cfg,
                                                  const data::Dataset& train_data,
                                                  const StageHyper& stage1,
                                                  const StageHyper& stage2,
                                                  const std::optional<std::string>& sae_archive,
                                                  std::uint64_t seed);

std::vector<train::StagePlan> linked_cnnloc_schedule(const CnnConfig& cfg,
                                                     const data::Dataset& train_data,
                                                     const StageHyper& stage1,
                                                     const StageHyper& stage2,
                                                     const StageHyper& stage3,
                                                     const std::optional<std::string>& sae_archive,
                                                     std::uint64_t seed);

train::ReferencePlan reference_dnn_plan(const DnnConfig& cfg, const data::Dataset& train_data,
                                        const StageHyper& hyper, std::uint64_t seed);
train::ReferencePlan reference_cnnloc_plan(const CnnConfig& cfg, const data::Dataset& train_data,
                                           const StageHyper& hyper, std::uint64_t seed);

// Load a pretrained SAE encoder (block ENC) into the reference trunk's
// encoder block, mirroring the linked models' stage-1 init.
void apply_pretrained_encoder(train::ReferencePlan& plan, const std::string& sae_archive);

// Reconstruction-train the SAE and return the encoder weights only (block
// ENC), ready to serve PretrainedInit rules.
train::StageResult pretrain_sae(const SaeConfig& cfg, const data::Dataset& train_data,
                                const StageHyper& hyper, std::uint64_t seed);

// A trained model ready for inference: site/scaler metadata plus the stage
// networks (linked kinds) or trunk+heads (reference kinds) with weights
// applied.
struct ModelBundle {
    ModelKind kind = ModelKind::LinkedDnn;
    data::SitePlan plan;
    data::ScalerParams scaler;
    std::vector<nn::Network<float>> stage_nets;  // linked kinds: one per stage
    std::optional<ReferenceModel> reference;     // reference kinds
};

// Build the bundle's networks for `kind` and apply per-stage weights
// (reference kinds take exactly one weight set covering trunk and heads).
ModelBundle make_bundle(ModelKind kind, const DnnConfig& dnn, const CnnConfig& cnn,
                        const data::SitePlan& plan, const data::ScalerParams& scaler,
                        const std::vector<io::BlockWeights>& stage_weights);

// Classification by per-group argmax (lowest index wins ties), coordinates
// inverse-scaled to meters. X is a scaled-RSSI batch.
std::vector<data::Prediction> predict(const ModelBundle& bundle, const nn::Tensor<float>& X);

}  // namespace hst::model
