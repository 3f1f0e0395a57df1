#include <gtest/gtest.h>

#include <cstdlib>

#include "support.hpp"
#include "toponym/config.hpp"

using namespace toponym;

namespace {

std::filesystem::path presets_dir() { return std::filesystem::path(TOPONYM_SOURCE_DIR) / "presets"; }

std::string field_of(const std::string& content) {
  try {
    parse_config(content);
  } catch (const ConfigError& e) {
    return e.field();
  }
  return "<none>";
}

}  // namespace

TEST(Config, DefaultsWhenEmpty) {
  const auto cfg = parse_config("");
  EXPECT_EQ(cfg.experiment.training, TrainConfig{});
  EXPECT_EQ(cfg.experiment.features, FeatureConfig{});
  EXPECT_EQ(cfg.experiment.arch, ArchShape{});
  EXPECT_EQ(cfg.oov_mode, OovMode::Zero);
}

TEST(Config, ParsesAllSections) {
  const auto cfg = parse_config(R"(
# comment
name = demo
seed = 9

[features]
window = 3
capitalization = true
pos = yes
oov = hashed-random

[training]
learning_rate = 0.05
weight_toponym = 3

[arch]
hidden_layers = 2
hidden_units = 64
dropout = 0.25

[paths]
corpus = corpus
embeddings = a.txt, b.txt
)");
  EXPECT_EQ(cfg.experiment.name, "demo");
  EXPECT_EQ(cfg.seed(), 9u);
  EXPECT_EQ(cfg.experiment.features.window, 3u);
  EXPECT_TRUE(cfg.experiment.features.use_capitalization);
  EXPECT_TRUE(cfg.experiment.features.use_pos);
  EXPECT_EQ(cfg.oov_mode, OovMode::HashedRandom);
  EXPECT_EQ(cfg.oov_policy().seed, 9u);
  EXPECT_DOUBLE_EQ(cfg.experiment.training.learning_rate, 0.05);
  EXPECT_DOUBLE_EQ(cfg.experiment.training.class_weights.toponym, 3.0);
  EXPECT_EQ(cfg.experiment.arch, (ArchShape{2, 64, 0.25}));
  EXPECT_EQ(cfg.paths.embeddings, (std::vector<std::string>{"a.txt", "b.txt"}));
}

TEST(Config, ErrorsNameTheField) {
  EXPECT_EQ(field_of("[training]\nbatch_size = many\n"), "training.batch_size");
  EXPECT_EQ(field_of("[features]\ncolour = red\n"), "features.colour");
  EXPECT_EQ(field_of("[features]\nwindow = 1\nwindow = 2\n"), "features.window");
  EXPECT_EQ(field_of("[bogus]\n"), "bogus");
  EXPECT_EQ(field_of("[features]\noov = maybe\n"), "features.oov");
  EXPECT_EQ(field_of("[features]\npos = perhaps\n"), "features.pos");
}

TEST(Config, ValidationRejectsBadValues) {
  auto cfg = parse_config("[training]\nweight_toponym = 0\n");
  EXPECT_THROW(validate_settings(cfg), ConfigError);
  cfg = parse_config("[arch]\ndropout = 1.0\n");
  EXPECT_THROW(validate_settings(cfg), ConfigError);
  cfg = parse_config("[training]\nmomentum = 1.5\n");
  EXPECT_THROW(validate_settings(cfg), ConfigError);
  EXPECT_NO_THROW(validate_settings(parse_config("")));
}

TEST(Config, InputDimMustMatchLayout) {
  auto cfg = parse_config("[arch]\ninput_dim = 999\n");
  try {
    check_input_dim(cfg, 200);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.field(), "arch.input_dim");
  }
  cfg = parse_config("[arch]\ninput_dim = 1000\n");
  EXPECT_EQ(check_input_dim(cfg, 200), 1000u);
}

TEST(Config, SerializeRoundTrip) {
  auto cfg = parse_config("name = x\nseed = 3\n[features]\nwindow = 4\nlemma = true\n[training]\nlearning_rate = 0.1\n"
                          "[paths]\ncorpus = c\nembeddings = e1,e2\nmodel = m.dffnn\n");
  EXPECT_EQ(parse_config(serialize_config(cfg)), cfg);
}

TEST(Config, PresetFilesMatchBuiltIns) {
  for (const auto& name : preset_names()) {
    const auto file = presets_dir() / (name + ".conf");
    ASSERT_TRUE(std::filesystem::exists(file)) << file;
    const auto cfg = load_config(file);
    Experiment expected = *preset(name);
    expected.training.seed = cfg.seed();
    EXPECT_EQ(cfg.experiment, expected) << name;
  }
}

TEST(Config, WithPresetKeepsSeedAndPaths) {
  auto cfg = parse_config("seed = 5\n[paths]\ncorpus = somewhere\n");
  const auto full = with_preset(cfg, "full");
  EXPECT_EQ(full.seed(), 5u);
  EXPECT_EQ(full.paths.corpus_dir, "somewhere");
  EXPECT_TRUE(full.experiment.features.use_lemma);
  EXPECT_THROW(with_preset(cfg, "nope"), ConfigError);
}

TEST(Config, ResolvePathOrder) {
  toponym::testing::TempDir base, data;
  toponym::testing::write_file(base / "only_base.txt", "");
  toponym::testing::write_file(data / "only_data.txt", "");
  ::setenv("TOPO_DATA_DIR", data.path().c_str(), 1);
  EXPECT_EQ(resolve_path("only_base.txt", base.path()), base / "only_base.txt");
  EXPECT_EQ(resolve_path("only_data.txt", base.path()), data / "only_data.txt");
  EXPECT_EQ(resolve_path("missing.txt", base.path()), std::filesystem::path("missing.txt"));
  ::unsetenv("TOPO_DATA_DIR");
}

TEST(Config, MissingFile) { EXPECT_THROW(load_config("/nonexistent/x.conf"), ConfigError); }
