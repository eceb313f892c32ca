#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "hst/archive.hpp"
#include "hst/dataset.hpp"
#include "hst/losses.hpp"
#include "hst/network.hpp"
#include "hst/optim.hpp"

namespace hst::train {

// How a block's parameters come to exist at the start of its stage.
struct RandomInit {
    std::uint64_t seed = 0;
};
struct PretrainedInit {
    std::string archive_path;
    std::string symbol;  // block symbol inside the archive
};
struct LinkedCopyInit {
    std::string source_symbol;  // block in the previous stage's result
};
using InitRule = std::variant<RandomInit, PretrainedInit, LinkedCopyInit>;

// What a stage (or reference head) regresses/classifies against.
enum class TargetKind { OneHotConcat, OneHotBuilding, OneHotFloor, Coords2D, Reconstruction };

// Target tensor of `kind` for every record of `d`, training-space scaled.
nn::Tensor<float> stage_targets(const data::Dataset& d, TargetKind kind);

struct EarlyStopConfig {
    int patience = 20;          // stop after this many epochs without val improvement
    double val_fraction = 0.1;  // stratified share of the stage dataset held out
};

// Per-epoch progress callback (val_loss is NaN without a validation split).
struct EpochLog {
    int epoch = 0;  // 1-based
    double train_loss = 0.0;
    double val_loss = 0.0;
    double lr = 0.0;
};
using EpochLogger = std::function<void(const EpochLog&)>;

// One stage of Algorithm 1: a network over the scaled-RSSI input domain, an
// init rule per block, a target/loss pair and the learning-loop settings.
struct StagePlan {
    int stage = 1;
    std::string name;
    nn::Network<float> net;
    std::vector<std::pair<std::string, InitRule>> init_rules;  // one entry per block
    const data::Dataset* data = nullptr;
    TargetKind target = TargetKind::OneHotConcat;
    nn::LossKind loss = nn::LossKind::Bce;
    nn::AdamConfig optimizer;
    std::optional<nn::PlateauConfig> scheduler;
    int max_epochs = 300;
    std::size_t batch_size = 24;
    std::optional<EarlyStopConfig> early_stop = EarlyStopConfig{};
    std::uint64_t shuffle_seed = 0;
    EpochLogger epoch_log;  // optional progress reporting; no effect on results
};

struct TrainTrace {
    std::vector<double> train_loss;  // per epoch, sample-weighted batch mean
    std::vector<double> val_loss;    // parallel to train_loss; empty without a val split
    std::vector<double> lr;          // lr in effect during each epoch
    int best_epoch = -1;             // 0-based epoch of the kept weights (early stop only)
    bool stopped_early = false;
    double seconds = 0.0;  // training loop only
};

// Frozen outcome of one stage.
struct StageResult {
    int stage = 1;
    std::string name;
    io::BlockWeights weights;
    TrainTrace trace;
    bool frozen = false;
    std::string checksum;  // weights_checksum(weights) at freeze time
    std::vector<std::string> warnings;
};

// Structural validation of a whole HST schedule: contiguous stages 1..S, one
// rule per block, LinkedCopy only after stage 1 and only from a shape-equal
// block of the immediately preceding stage. Throws ConfigError listing every
// violation.
void validate_plans(const std::vector<StagePlan>& plans);

// Algorithm 1 init branch: materialize W_s^init per block from its rule.
// Every returned tensor is an independent deep copy.
io::BlockWeights resolve_init(const StagePlan& plan, const std::vector<StageResult>& prior);

// Algorithm 1 learning step: W_s = L(T_s, W_s^init). Mini-batch Adam with
// seeded shuffling, optional plateau scheduler and early stopping on a
// stratified validation split (best-validation weights kept). max_epochs == 0
// returns the init unchanged with an empty trace.
StageResult train_stage(const StagePlan& plan, const io::BlockWeights& init);

// Whole-algorithm driver: resolve + train per stage in ascending order,
// re-checking earlier results' checksums after every stage.
std::vector<StageResult> run_hst(const std::vector<StagePlan>& plans);

// One output head of a conventionally trained (reference) model. Its network
// consumes the trunk's output; zero-weight heads are skipped entirely.
struct HeadPlan {
    std::string name;
    nn::Network<float> net;
    TargetKind target = TargetKind::Coords2D;
    nn::LossKind loss = nn::LossKind::Mse;
    double weight = 1.0;
};

// Joint single-phase training plan for a reference model: shared trunk plus
// per-head chains, minimizing the weighted sum of head losses.
struct ReferencePlan {
    std::string name;
    nn::Network<float> trunk;
    std::vector<HeadPlan> heads;
    const data::Dataset* data = nullptr;
    nn::AdamConfig optimizer;
    std::optional<nn::PlateauConfig> scheduler;
    int max_epochs = 300;
    std::size_t batch_size = 24;
    std::optional<EarlyStopConfig> early_stop = EarlyStopConfig{};
    std::uint64_t shuffle_seed = 0;
    EpochLogger epoch_log;
};

// Conventional joint training ("trained in a conventional way"). The result's
// weights hold the trunk blocks plus every head's blocks; block symbols must
// be globally unique across trunk and heads.
StageResult train_reference(const ReferencePlan& plan);

}  // namespace hst::train
