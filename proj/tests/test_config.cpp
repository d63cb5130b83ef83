#include <gtest/gtest.h>

#include <string>

#include "idstyle/config.hpp"
#include "test_util.hpp"

namespace idstyle {
namespace {

TEST(Config, DeskDefaults) {
  const TrainConfig c = TrainConfig::desk();
  EXPECT_EQ(c.world.layers, 6);
  EXPECT_EQ(c.world.dim, 32);
  EXPECT_EQ(c.world.attributes, 4);
  EXPECT_EQ(c.batch_size, 8);
  EXPECT_EQ(c.iterations, 5000);
  EXPECT_EQ(c.learning_rate, 1e-3);
  EXPECT_EQ(c.beta1, 0.98);
  EXPECT_EQ(c.beta2, 0.98);
  EXPECT_EQ(c.eps, 1e-8);
  EXPECT_EQ(c.clip_grad_norm, 0.0);
  EXPECT_NO_THROW(c.validate());
}

TEST(Config, ParsesKeysCommentsAndBlankLines) {
  const TrainConfig c = parse_config(
      "# desk run\n"
      "\n"
      "layers = 4   # fewer layers\n"
      "dim=16\n"
      "attribute_names = a, b\n"
      "lambda_id = 2.5\n"
      "direction_norm = l1\n"
      "target_mode = random\n"
      "disable_cfc = true\n"
      "planted_sparsity = dense\n"
      "seed = 11\n");
  EXPECT_EQ(c.world.layers, 4);
  EXPECT_EQ(c.world.dim, 16);
  EXPECT_EQ(c.world.attributes, 2);
  EXPECT_EQ(c.attribute_names, (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(c.weights.identity, 2.5);
  EXPECT_EQ(c.direction_norm, DirectionNorm::L1);
  EXPECT_EQ(c.target_mode, TargetMode::Random);
  EXPECT_TRUE(c.ablations.disable_cfc);
  EXPECT_FALSE(c.world.planted_sparsity.has_value());
  EXPECT_EQ(c.seed, 11u);
  EXPECT_EQ(c.world.seed, 11u);
  EXPECT_EQ(c.attribute_index("b"), 1);
  EXPECT_THROW(c.attribute_index("c"), ConfigError);
}

TEST(Config, RejectsBadInput) {
  EXPECT_THROW(parse_config("colour = red\n"), ConfigError);
  EXPECT_THROW(parse_config("dim = 32\ndim = 16\n"), ConfigError);
  EXPECT_THROW(parse_config("dim 32\n"), ConfigError);
  EXPECT_THROW(parse_config("dim = 31\n"), ConfigError);
  EXPECT_THROW(parse_config("learning_rate = 0\n"), ConfigError);
  EXPECT_THROW(parse_config("beta1 = 1\n"), ConfigError);
  EXPECT_THROW(parse_config("batch_size = 0\n"), ConfigError);
  EXPECT_THROW(parse_config("lambda_nb = -1\n"), ConfigError);
  EXPECT_THROW(parse_config("lambda_nb = nan\n"), ConfigError);
  EXPECT_THROW(parse_config("disable_cfc = maybe\n"), ConfigError);
  EXPECT_THROW(parse_config("attribute_names = a,a,b,c\n"), ConfigError);
  EXPECT_THROW(parse_config("attributes = 3\nattribute_names = a,b\n"), ConfigError);
  EXPECT_THROW(parse_config("identity_dim = 300\n"), ConfigError);
}

TEST(Config, AblationsMaskLossWeights) {
  TrainConfig c = TrainConfig::desk();
  c.ablations.disable_sparsity_loss = true;
  EXPECT_EQ(c.effective_weights().sparsity, 0.0);
  EXPECT_EQ(c.effective_weights().direction, 1.0);
  c.ablations.disable_direction_loss = true;
  EXPECT_EQ(c.effective_weights().direction, 0.0);
  c.ablations.disable_output_embedding = true;
  EXPECT_FALSE(c.editor_options().use_output_gate);
}

TEST(Config, TextRoundTripIsExact) {
  TrainConfig c = TrainConfig::desk();
  c.learning_rate = 0.1 + 0.2;
  c.weights.neighborhood = 1.0 / 3.0;
  c.world.layer_weights = {1.0, 0.5, 1.0 / 3.0, 0.25, 0.2, 1.0 / 6.0};
  c.world.seed = 99;
  c.clip_grad_norm = 100;
  c.ablations.disable_input_pe = true;
  const std::string text = to_text(c);
  const TrainConfig back = parse_config(text);
  EXPECT_EQ(to_text(back), text);
  EXPECT_EQ(back.learning_rate, c.learning_rate);
  EXPECT_EQ(back.weights.neighborhood, c.weights.neighborhood);
  EXPECT_EQ(back.world.layer_weights, c.world.layer_weights);
  EXPECT_EQ(back.world.seed, 99u);
  EXPECT_EQ(back.world.planted_sparsity, c.world.planted_sparsity);
}

TEST(Config, LoadsShippedDeskFile) {
  const TrainConfig c = load_config(IDSTYLE_SOURCE_DIR "/configs/desk.cfg");
  EXPECT_EQ(c.attribute_names, (std::vector<std::string>{"gender", "glasses", "age", "smile"}));
  EXPECT_EQ(c.seed, 7u);
  EXPECT_THROW(load_config("/nonexistent/desk.cfg"), ConfigError);
}

}  // namespace
}  // namespace idstyle
