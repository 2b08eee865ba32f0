#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>

#include "affectlab/checkpoint.hpp"
#include "affectlab/config.hpp"
#include "affectlab/lab.hpp"
#include "test_util.hpp"

using namespace affectlab;
using nlohmann::json;

namespace {

std::filesystem::path scratch_file(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / "affectlab_io";
    std::filesystem::create_directories(dir);
    return dir / name;
}

std::string error_of(const json& j) {
    try {
        config::from_json(j);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST_CASE("checkpoints round trip bit for bit") {
    ParameterSet params;
    params.add("a", Tensor::vector({0.1, -1.0 / 3.0, std::numeric_limits<double>::denorm_min(), 1e300}, true));
    params.add("b.W", Tensor::matrix(2, 2, {std::nextafter(1.0, 2.0), -0.0, 2.0 / 7.0, 6.02214076e23}, true));
    const auto path = scratch_file("bits.json");
    Checkpoint::capture(params, 12).save(path);
    const auto back = Checkpoint::load(path);
    CHECK(back.step == 12);

    ParameterSet other;
    other.add("a", Tensor::zeros({4}, true));
    other.add("b.W", Tensor::zeros({2, 2}, true));
    back.restore(other);
    for (const auto& [name, t] : params) {
        const auto x = t.to_vector(), y = other.get(name).to_vector();
        for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::memcmp(&x[i], &y[i], sizeof(double)) == 0);
    }
    CHECK_FALSE(std::filesystem::exists(path.string() + ".tmp"));
}

TEST_CASE("a trained agent's checkpoint restores exactly") {
    auto c = config::smoke_run_config();
    rdl::Agent agent = lab::make_agent(c);
    rdl::train(agent, lab::env_factory(lab::make_scenario(c)), c.train);
    const auto path = scratch_file("agent.json");
    Checkpoint::capture(agent.params(), 5).save(path);
    rdl::Agent fresh = lab::make_agent(c);
    Checkpoint::load(path).restore(fresh.params());
    for (const auto& [name, t] : agent.params()) CHECK(fresh.params().get(name).to_vector() == t.to_vector());
}

TEST_CASE("restore names the mismatched tensor") {
    ParameterSet saved;
    saved.add("layer.W", Tensor::zeros({2, 3}));
    saved.add("layer.b", Tensor::zeros({3}));
    const auto ckpt = Checkpoint::capture(saved, 0);

    ParameterSet wrong_shape;
    wrong_shape.add("layer.W", Tensor::zeros({3, 2}));
    wrong_shape.add("layer.b", Tensor::zeros({3}));
    try {
        ckpt.restore(wrong_shape);
        FAIL("expected DimensionError");
    } catch (const DimensionError& e) {
        CHECK(std::string(e.what()).find("layer.W") != std::string::npos);
    }

    ParameterSet missing;
    missing.add("layer.W", Tensor::zeros({2, 3}));
    missing.add("layer.gain", Tensor::zeros({3}));
    CHECK_THROWS_AS(ckpt.restore(missing), DimensionError);
}

TEST_CASE("malformed checkpoints are rejected") {
    CHECK_THROWS(Checkpoint::from_json("{\"format_version\":2,\"step\":0,\"params\":{}}"));
    CHECK_THROWS_AS(
        Checkpoint::from_json("{\"format_version\":1,\"step\":0,\"params\":{\"x\":{\"shape\":[2],\"data\":[1]}}}"),
        DimensionError);
    CHECK_THROWS(Checkpoint::load(scratch_file("does_not_exist.json")));
}

TEST_CASE("config JSON round trips") {
    const auto c = config::default_run_config();
    const json j = config::to_json(c);
    CHECK(config::to_json(config::from_json(j)) == j);
    const auto s = config::smoke_run_config();
    CHECK(config::to_json(config::from_json(config::to_json(s))) == config::to_json(s));
    CHECK(c.model_seed() != c.eval_seed());
}

TEST_CASE("partial configs keep defaults") {
    const auto c = config::from_json(json{{"train", {{"episodes", 40}, {"seed", 9}}}});
    CHECK(c.train.episodes == 40);
    CHECK(c.train.seed == 9);
    CHECK(c.model.d_k == config::default_run_config().model.d_k);
}

TEST_CASE("config errors name the key path") {
    CHECK(error_of(json{{"train", {{"epochs", 3}}}}).starts_with("train.epochs"));
    CHECK(error_of(json{{"bogus", 1}}).starts_with("bogus"));
    CHECK(error_of(json{{"train", {{"episodes", -5}}}}).starts_with("train.episodes"));
    CHECK(error_of(json{{"train", {{"learning_rate", "fast"}}}}).starts_with("train.learning_rate"));
    CHECK(error_of(json{{"model", {{"d_k", 6}}}}).starts_with("model.d_k"));
    CHECK(error_of(json{{"train", {{"reward_weights", {{"immediate", 0.9}}}}}}).starts_with("train"));
    CHECK(error_of(json{{"ablation", {{"text_only", 1}}}}).starts_with("ablation.text_only"));
    CHECK(error_of(json{{"env", {{"num_strategies", 1}}}}).starts_with("env"));
}

TEST_CASE("config files") {
    const auto path = scratch_file("cfg.json");
    {
        std::ofstream out(path);
        out << R"({"train": {"episodes": 12}})";
    }
    CHECK(config::load(path).train.episodes == 12);
    {
        std::ofstream out(path);
        out << "{not json";
    }
    CHECK_THROWS_AS(config::load(path), ConfigError);
    try {
        config::load(scratch_file("missing.json"));
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("missing.json") != std::string::npos);
    }
}

TEST_CASE("shipped configs load") {
    const std::filesystem::path root = AFFECTLAB_SOURCE_DIR;
    CHECK(config::to_json(config::load(root / "configs" / "default.json")) ==
          config::to_json(config::default_run_config()));
    CHECK_NOTHROW(config::load(root / "configs" / "smoke.json"));
}
