#include <doctest.h>

#include <variant>

#include "helpers.hpp"
#include "hst/archive.hpp"
#include "hst/models.hpp"

using namespace hst;
using namespace hst::model;

namespace {

const data::SitePlan kUjiPlan{3, {4, 4, 5}, 520};

std::size_t block_param_count(const nn::Network<float>& net, const std::string& symbol) {
    std::size_t n = 0;
    for (const auto& t : net.block_tensors(symbol)) n += t.size();
    return n;
}

io::BlockWeights zero_weights(nn::Network<float>& net) {
    io::BlockWeights w;
    for (auto& layer : net.params) {
        for (auto& t : layer) t.data.assign(t.size(), 0.0f);
    }
    for (const auto& b : net.blocks) w[b.symbol] = net.block_tensors(b.symbol);
    return w;
}

}  // namespace

TEST_CASE("model kinds: names and stage counts") {
    CHECK(model_kind_from("linked-dnn") == ModelKind::LinkedDnn);
    CHECK(model_kind_from(model_kind_name(ModelKind::ReferenceCnnloc)) ==
          ModelKind::ReferenceCnnloc);
    CHECK_THROWS_AS(model_kind_from("dnn"), ConfigError);
    CHECK(num_stages(ModelKind::LinkedDnn) == 2);
    CHECK(num_stages(ModelKind::LinkedCnnloc) == 3);
    CHECK(num_stages(ModelKind::ReferenceDnn) == 1);
    CHECK(num_stages(ModelKind::ReferenceCnnloc) == 1);
}

TEST_CASE("sae: encoder/decoder structure and parameter count") {
    const SaeConfig cfg;  // 520 -> 520 -> 260 -> 130
    auto net = build_sae(cfg, 1);
    REQUIRE(net.blocks.size() == 2);
    CHECK(net.blocks[0].symbol == "ENC");
    CHECK(net.blocks[1].symbol == "DEC");
    CHECK(net.output_width() == std::vector<std::size_t>{520});  // mirrored back out

    // 520*520+520 + 520*260+260 + 260*130+130
    CHECK(block_param_count(net, "ENC") == 440310);
    // decoder mirror: 130->260 (elu), 260->520 (linear)
    CHECK(block_param_count(net, "DEC") == (130 * 260 + 260) + (260 * 520 + 520));

    // last decoder layer is linear (no trailing activation)
    CHECK(std::holds_alternative<nn::DenseSpec>(net.layers.back()));
}

TEST_CASE("linked dnn: stage structure and linked shape agreement") {
    const DnnConfig cfg;
    auto s1 = build_linked_dnn(cfg, kUjiPlan, DnnStage::Stage1, 3);
    auto s2 = build_linked_dnn(cfg, kUjiPlan, DnnStage::Stage2, 4);

    CHECK(s1.has_block("E_BF"));
    CHECK(s1.has_block("H_BF"));
    CHECK(s1.has_block("C"));
    CHECK(s1.output_width() == std::vector<std::size_t>{8});  // 3 buildings + 5 floors

    CHECK(s2.has_block("E_L"));
    CHECK(s2.has_block("H_L"));
    CHECK(s2.has_block("R"));
    CHECK(s2.output_width() == std::vector<std::size_t>{2});

    // linked pairs agree on every tensor shape
    CHECK(s1.block_shapes("E_BF") == s2.block_shapes("E_L"));
    CHECK(s1.block_shapes("H_BF") == s2.block_shapes("H_L"));

    // common trunk: two 520-wide ELU layers on the 130-dim code
    CHECK(block_param_count(s1, "H_BF") == (130 * 520 + 520) + (520 * 520 + 520));
}

TEST_CASE("linked cnnloc: stage structure, conv lengths and flatten width") {
    const CnnConfig cfg;
    auto s1 = build_linked_cnnloc(cfg, kUjiPlan, CnnStage::Stage1, 5);
    auto s2 = build_linked_cnnloc(cfg, kUjiPlan, CnnStage::Stage2, 6);
    auto s3 = build_linked_cnnloc(cfg, kUjiPlan, CnnStage::Stage3, 7);

    CHECK(s1.output_width() == std::vector<std::size_t>{3});  // buildings
    CHECK(s2.output_width() == std::vector<std::size_t>{5});  // floors
    CHECK(s3.output_width() == std::vector<std::size_t>{2});

    CHECK(s1.block_shapes("E_B") == s2.block_shapes("E_F"));
    CHECK(s2.block_shapes("E_F") == s3.block_shapes("E_L"));
    CHECK(s2.block_shapes("C_F") == s3.block_shapes("C_L"));

    // conv chain over the 130-wide code: 130-22+1=109, 109-22+1=88, 88-22+1=67
    // flatten: 67 * 33 = 2211, feeding the floor head
    CHECK(block_param_count(s2, "H_F") == 2211 * 5 + 5);
    CHECK(block_param_count(s3, "H_L") == 2211 * 2 + 2);

    // conv stack parameters: (99,1,22), (66,99,22), (33,66,22) plus biases
    const std::size_t conv_params = (99 * 1 * 22 + 99) + (66 * 99 * 22 + 66) + (33 * 66 * 22 + 33);
    CHECK(block_param_count(s2, "C_F") == conv_params);
}

TEST_CASE("schedules: init wiring follows the linked-copy pattern") {
    const auto site = testutil::tiny_site();
    DnnConfig dnn;
    dnn.sae.input_width = site.train.width;
    dnn.sae.encoder_widths = {8};
    dnn.common_widths = {8};
    dnn.location_hidden = 8;

    const StageHyper hyper;
    const auto plans = linked_dnn_schedule(dnn, site.train, hyper, hyper, std::nullopt, 1);
    REQUIRE(plans.size() == 2);
    CHECK(plans[0].name == "building-floor");
    CHECK(plans[1].name == "location");
    CHECK(plans[0].target == train::TargetKind::OneHotConcat);
    CHECK(plans[0].loss == nn::LossKind::Bce);
    CHECK(plans[1].target == train::TargetKind::Coords2D);
    CHECK(plans[1].loss == nn::LossKind::Mse);

    const auto rule_of = [](const train::StagePlan& p, const std::string& sym) {
        for (const auto& [s, r] : p.init_rules) {
            if (s == sym) return r;
        }
        throw std::runtime_error("no rule for " + sym);
    };
    CHECK(std::holds_alternative<train::RandomInit>(rule_of(plans[0], "E_BF")));
    const auto el = rule_of(plans[1], "E_L");
    REQUIRE(std::holds_alternative<train::LinkedCopyInit>(el));
    CHECK(std::get<train::LinkedCopyInit>(el).source_symbol == "E_BF");
    const auto hl = rule_of(plans[1], "H_L");
    CHECK(std::get<train::LinkedCopyInit>(hl).source_symbol == "H_BF");
    CHECK(std::holds_alternative<train::RandomInit>(rule_of(plans[1], "R")));

    // with a pretrained archive, stage 1's encoder loads from it
    const auto with_sae = linked_dnn_schedule(dnn, site.train, hyper, hyper, "enc.json", 1);
    const auto enc = rule_of(with_sae[0], "E_BF");
    REQUIRE(std::holds_alternative<train::PretrainedInit>(enc));
    CHECK(std::get<train::PretrainedInit>(enc).archive_path == "enc.json");
    CHECK(std::get<train::PretrainedInit>(enc).symbol == "ENC");
}

TEST_CASE("schedules: cnnloc copies encoder then conv stack forward") {
    const auto site = testutil::tiny_site();
    CnnConfig cnn;
    cnn.sae.input_width = site.train.width;
    cnn.sae.encoder_widths = {8};
    cnn.building_hidden = {8};
    cnn.conv = {{4, 3}, {2, 2}};

    const StageHyper hyper;
    const auto plans = linked_cnnloc_schedule(cnn, site.train, hyper, hyper, hyper,
                                              std::nullopt, 1);
    REQUIRE(plans.size() == 3);
    CHECK(plans[0].name == "building");
    CHECK(plans[1].name == "floor");
    CHECK(plans[2].name == "location");
    CHECK(plans[1].target == train::TargetKind::OneHotFloor);
    CHECK(plans[1].loss == nn::LossKind::Ce);

    const auto rule_of = [](const train::StagePlan& p, const std::string& sym) {
        for (const auto& [s, r] : p.init_rules) {
            if (s == sym) return r;
        }
        throw std::runtime_error("no rule for " + sym);
    };
    CHECK(std::get<train::LinkedCopyInit>(rule_of(plans[1], "E_F")).source_symbol == "E_B");
    CHECK(std::holds_alternative<train::RandomInit>(rule_of(plans[1], "C_F")));
    CHECK(std::get<train::LinkedCopyInit>(rule_of(plans[2], "E_L")).source_symbol == "E_F");
    CHECK(std::get<train::LinkedCopyInit>(rule_of(plans[2], "C_L")).source_symbol == "C_F");
    CHECK(std::holds_alternative<train::RandomInit>(rule_of(plans[2], "H_L")));
}

TEST_CASE("pretrain_sae: returns encoder weights only") {
    const auto site = testutil::tiny_site();
    SaeConfig cfg;
    cfg.input_width = site.train.width;
    cfg.encoder_widths = {8, 4};
    StageHyper hyper;
    hyper.max_epochs = 2;
    hyper.batch_size = 16;
    hyper.early_stop.reset();
    const auto res = pretrain_sae(cfg, site.train, hyper, 77);
    CHECK(res.weights.size() == 1);
    REQUIRE(res.weights.count("ENC") == 1);
    CHECK(res.weights.at("ENC").size() == 4);  // two dense layers, weight+bias each
    CHECK(res.checksum == io::weights_checksum(res.weights));
    CHECK(res.trace.train_loss.size() == 2);
}

TEST_CASE("reference models: trunk/head structure mirrors the linked stages") {
    const DnnConfig dnn;
    auto ref = build_reference_dnn(dnn, kUjiPlan, 2);
    CHECK(ref.trunk.has_block("E"));
    CHECK(ref.trunk.has_block("H"));
    REQUIRE(ref.heads.size() == 2);
    CHECK(ref.heads[0].name == "building_floor");
    CHECK(ref.heads[0].weight == 1.0);
    CHECK(ref.heads[1].name == "location");
    CHECK(ref.heads[1].weight == 1.0);
    CHECK(ref.trunk.block_shapes("E") ==
          build_linked_dnn(dnn, kUjiPlan, DnnStage::Stage1, 0).block_shapes("E_BF"));

    const CnnConfig cnn;
    auto cref = build_reference_cnnloc(cnn, kUjiPlan, 3);
    CHECK(cref.trunk.has_block("E"));
    REQUIRE(cref.heads.size() == 3);
    CHECK(cref.heads[0].name == "building");
    CHECK(cref.heads[1].name == "floor");
    CHECK(cref.heads[2].name == "location");
    // each conv head owns its own conv stack over the 130-dim code
    CHECK(cref.heads[1].net.output_width() == std::vector<std::size_t>{5});
    CHECK(cref.heads[2].net.output_width() == std::vector<std::size_t>{2});
}

TEST_CASE("apply_pretrained_encoder loads ENC into the reference trunk") {
    testutil::TempDir dir("sae");
    const auto site = testutil::tiny_site();
    DnnConfig dnn;
    dnn.sae.input_width = site.train.width;
    dnn.sae.encoder_widths = {8};
    dnn.common_widths = {8};
    dnn.location_hidden = 8;

    StageHyper hyper;
    hyper.max_epochs = 0;
    const auto sae = pretrain_sae(dnn.sae, site.train, hyper, 5);
    io::save_weights_archive(dir.str("sae.json"), {"sae", 0, "sae", sae.weights});

    auto plan = reference_dnn_plan(dnn, site.train, hyper, 6);
    apply_pretrained_encoder(plan, dir.str("sae.json"));
    const auto got = plan.trunk.block_tensors("E");
    const auto& want = sae.weights.at("ENC");
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < got.size(); ++i) CHECK(got[i].data == want[i].data);
}

TEST_CASE("predict: tie-break, decoding and coordinate unscaling") {
    data::SitePlan plan{2, {3, 3}, 6};
    data::ScalerParams scaler;
    scaler.x_min = 3.0;
    scaler.x_max = 13.0;
    scaler.y_min = 7.0;
    scaler.y_max = 107.0;

    DnnConfig dnn;
    dnn.sae.input_width = 6;
    dnn.sae.encoder_widths = {4};
    dnn.common_widths = {4};
    dnn.location_hidden = 4;

    auto s1 = build_linked_dnn(dnn, plan, DnnStage::Stage1, 0);
    auto s2 = build_linked_dnn(dnn, plan, DnnStage::Stage2, 0);
    const auto bundle = make_bundle(ModelKind::LinkedDnn, dnn, {}, plan, scaler,
                                    {zero_weights(s1), zero_weights(s2)});

    nn::Tensor<float> X({2, 6});
    const auto preds = predict(bundle, X);
    REQUIRE(preds.size() == 2);
    // all-zero weights give uniform scores: ties resolve to the lowest id,
    // and the zero location output lands on (x_min, y_min)
    CHECK(preds[0].building == 0);
    CHECK(preds[0].floor == 0);
    CHECK(preds[0].x_m == doctest::Approx(3.0));
    CHECK(preds[0].y_m == doctest::Approx(7.0));
}

TEST_CASE("predict: agrees with manual stage-wise decoding") {
    const auto site = testutil::tiny_site();
    DnnConfig dnn;
    dnn.sae.input_width = site.train.width;
    dnn.sae.encoder_widths = {8};
    dnn.common_widths = {8};
    dnn.location_hidden = 8;

    StageHyper hyper;
    hyper.max_epochs = 3;
    hyper.batch_size = 16;
    hyper.early_stop.reset();
    auto plans = linked_dnn_schedule(dnn, site.train, hyper, hyper, std::nullopt, 9);
    const auto results = train::run_hst(plans);

    std::vector<io::BlockWeights> weights;
    for (const auto& r : results) weights.push_back(r.weights);
    const auto bundle = make_bundle(ModelKind::LinkedDnn, dnn, {}, site.train.plan,
                                    site.train.scaler, weights);
    const auto X = site.test.features_tensor();
    const auto preds = predict(bundle, X);
    REQUIRE(preds.size() == site.test.count());

    // manual decode through the stage networks
    auto net1 = build_linked_dnn(dnn, site.train.plan, DnnStage::Stage1, 0);
    auto net2 = build_linked_dnn(dnn, site.train.plan, DnnStage::Stage2, 0);
    for (const auto& [sym, tensors] : results[0].weights) net1.set_block_tensors(sym, tensors);
    for (const auto& [sym, tensors] : results[1].weights) net2.set_block_tensors(sym, tensors);
    const auto out1 = nn::forward(net1, X).back();
    const auto out2 = nn::forward(net2, X).back();
    const int nb = site.train.plan.num_buildings;
    const int nf = site.train.plan.num_floors();
    for (std::size_t r = 0; r < preds.size(); ++r) {
        int bld = 0, flr = 0;
        for (int j = 1; j < nb; ++j) {
            if (out1(r, j) > out1(r, bld)) bld = j;
        }
        for (int j = 1; j < nf; ++j) {
            if (out1(r, nb + j) > out1(r, nb + flr)) flr = j;
        }
        CHECK(preds[r].building == bld);
        CHECK(preds[r].floor == flr);
        CHECK(preds[r].x_m ==
              doctest::Approx(site.train.scaler.unscale_x(out2(r, 0))).epsilon(1e-12));
        CHECK(preds[r].y_m ==
              doctest::Approx(site.train.scaler.unscale_y(out2(r, 1))).epsilon(1e-12));
    }
}

TEST_CASE("make_bundle: validates stage counts and model kind") {
    DnnConfig dnn;
    dnn.sae.input_width = 6;
    dnn.sae.encoder_widths = {4};
    dnn.common_widths = {4};
    dnn.location_hidden = 4;
    const data::SitePlan plan{2, {3, 3}, 6};
    auto s1 = build_linked_dnn(dnn, plan, DnnStage::Stage1, 0);
    auto w1 = zero_weights(s1);
    CHECK_THROWS_AS(make_bundle(ModelKind::LinkedDnn, dnn, {}, plan, {}, {w1}), ConfigError);
}
