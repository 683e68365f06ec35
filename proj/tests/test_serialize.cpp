#include <cmath>
#include <filesystem>

#include <gtest/gtest.h>

#include "llmceg/errors.hpp"
#include "llmceg/io.hpp"
#include "llmceg/serialize.hpp"

using namespace llmceg;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("llmceg_test_" + name);
    fs::remove_all(p);
    return p;
}

}  // namespace

TEST(Numbers, NonFiniteAsStrings) {
    EXPECT_EQ(number_to_json(INFINITY), "inf");
    EXPECT_EQ(number_to_json(-INFINITY), "-inf");
    EXPECT_EQ(number_to_json(NAN), "nan");
    EXPECT_EQ(number_to_json(1.5), 1.5);
    EXPECT_TRUE(std::isinf(number_from_json(json("inf"))));
    EXPECT_LT(number_from_json(json("-inf")), 0.0);
    EXPECT_TRUE(std::isnan(number_from_json(json("nan"))));
    EXPECT_EQ(number_from_json(json(0.25)), 0.25);
    EXPECT_THROW(number_from_json(json("abc")), Error);
}

TEST(Configs, TrainConfigRoundTrip) {
    dpsgd::TrainConfig t;
    t.epochs = 3;
    t.learning_rate = 0.004;
    t.optimizer = dpsgd::Optimizer::sgd;
    t.dp_enabled = true;
    t.noise.sigma = 1.25;
    t.noise.seed = 99;
    t.clip.max_grad_norm = dpsgd::ClipConfig::kNoClip;
    const json j = t;
    const auto back = j.get<dpsgd::TrainConfig>();
    EXPECT_EQ(json(back), j);
    EXPECT_TRUE(std::isinf(back.clip.max_grad_norm));
    EXPECT_EQ(back.optimizer, dpsgd::Optimizer::sgd);
}

TEST(Configs, PartialDocumentKeepsDefaults) {
    dpsgd::TrainConfig t;
    dpsgd::from_json(json{{"epochs", 2}}, t);
    EXPECT_EQ(t.epochs, 2);
    EXPECT_EQ(t.batch_size, dpsgd::TrainConfig{}.batch_size);
    lm::ModelConfig m;
    lm::from_json(json{{"d_model", 32}}, m);
    EXPECT_EQ(m.d_model, 32);
    EXPECT_EQ(m.n_layers, lm::ModelConfig{}.n_layers);
}

TEST(Configs, TraceRoundTrip) {
    dpsgd::TrainTrace t;
    t.epoch_losses = {3.2, 2.1};
    t.steps = 76;
    t.sigma = 0.73;
    t.clip_norm = 1.0;
    t.epsilon = INFINITY;
    t.delta = 1e-5;
    t.q = 8.0 / 300;
    t.seed = 4;
    const auto back = json(t).get<dpsgd::TrainTrace>();
    EXPECT_EQ(back.epoch_losses, t.epoch_losses);
    EXPECT_EQ(back.steps, t.steps);
    EXPECT_TRUE(std::isinf(back.epsilon));
    EXPECT_EQ(back.q, t.q);
}

TEST(Configs, MiaRoundTrip) {
    const mia::MiaResult r{0.09, 0.72, 0.7, 0.22, 0.8, -INFINITY, 300, 200};
    EXPECT_EQ(json(r).get<mia::MiaResult>(), r);
}

TEST(Hashing, KnownDigest) {
    EXPECT_EQ(io::sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Files, AtomicWriteAndLines) {
    const fs::path dir = scratch("lines");
    const std::vector<std::string> text{"first line", "second"};
    io::write_lines(dir / "nested" / "a.txt", text);
    EXPECT_EQ(io::read_lines(dir / "nested" / "a.txt"), text);
    EXPECT_FALSE(fs::exists(dir / "nested" / "a.txt.tmp"));
    EXPECT_THROW(io::read_file(dir / "missing.txt"), IoError);
    fs::remove_all(dir);
}

TEST(Models, SaveLoadRoundTrip) {
    const fs::path dir = scratch("model");
    lm::ModelConfig c;
    c.d_model = 8;
    c.n_layers = 1;
    c.n_heads = 2;
    c.context_len = 12;
    const auto p = lm::ModelParams::init(c);
    const std::string hash = io::save_model(dir / "m.bin", p);
    EXPECT_EQ(hash, io::model_hash(p));
    EXPECT_TRUE(fs::exists(io::manifest_path_for(dir / "m.bin")));
    const auto back = io::load_model(dir / "m.bin");
    EXPECT_EQ(back.config(), c);
    EXPECT_TRUE(std::ranges::equal(back.values(), p.values()));
    EXPECT_EQ(io::model_hash(back), hash);
    EXPECT_EQ(fs::file_size(dir / "m.bin"), p.size() * sizeof(double));
    fs::remove_all(dir);
}

TEST(Models, CorruptFileRejected) {
    const fs::path dir = scratch("corrupt");
    lm::ModelConfig c;
    c.d_model = 8;
    c.n_layers = 1;
    c.n_heads = 2;
    c.context_len = 12;
    io::save_model(dir / "m.bin", lm::ModelParams::init(c));
    io::atomic_write(dir / "m.bin", "short");
    EXPECT_THROW(io::load_model(dir / "m.bin"), Error);
    fs::remove_all(dir);
}
