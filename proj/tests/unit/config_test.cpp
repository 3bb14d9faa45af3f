#include "fedcache/config.hpp"

#include <gtest/gtest.h>

using namespace fedcache;

TEST(Config, DefaultsValidate) {
    const ExperimentConfig cfg;
    EXPECT_NO_THROW(cfg.validate());
    EXPECT_EQ(cfg.related, 16u);
    EXPECT_DOUBLE_EQ(cfg.beta, 1.5);
    EXPECT_DOUBLE_EQ(cfg.lr, 0.01);
    EXPECT_EQ(cfg.batch_size, 8);
}

TEST(Config, ParseWithCommentsAndAliases) {
    const auto cfg = parse_config("# comment\nalgorithm = fd\nR = 4   # inline\nK=7\nalpha = 0.5\nacc_targets = 0.5, 0.7\n");
    EXPECT_EQ(cfg.algorithm, Algorithm::fd);
    EXPECT_EQ(cfg.related, 4u);
    EXPECT_EQ(cfg.clients, 7);
    EXPECT_DOUBLE_EQ(cfg.alpha, 0.5);
    EXPECT_EQ(cfg.acc_targets, (std::vector<double>{0.5, 0.7}));
}

TEST(Config, ParseOnTopOfBase) {
    ExperimentConfig base;
    base.seed = 99;
    EXPECT_EQ(parse_config("rounds = 3\n", base).seed, 99u);
    EXPECT_EQ(parse_config("seed = 4\n", base).seed, 4u);
}

TEST(Config, RejectsUnknownOrMalformed) {
    EXPECT_THROW(parse_config("bogus = 1\n"), std::invalid_argument);
    EXPECT_THROW(parse_config("rounds = ten\n"), std::invalid_argument);
    EXPECT_THROW(parse_config("rounds\n"), std::invalid_argument);
    EXPECT_THROW(parse_config("schedule = sometimes\n"), std::invalid_argument);
    EXPECT_THROW(parse_config("alpha = 0\n").validate(), std::invalid_argument);
    EXPECT_THROW(parse_config("temperature = -1\n").validate(), std::invalid_argument);
}

TEST(Config, SerializationRoundTripAndDigest) {
    auto cfg = parse_config("algorithm = standalone\nalpha = 0.3\nlr = 0.125\nschedule = async\nacc_targets = 0.6\n");
    const auto text = cfg.serialize();
    const auto back = parse_config(text);
    EXPECT_EQ(back.serialize(), text);
    EXPECT_EQ(config_digest(back), config_digest(cfg));
    EXPECT_EQ(config_digest(cfg).size(), 16u);
    cfg.seed += 1;
    EXPECT_NE(config_digest(cfg), config_digest(back));
}

TEST(Config, RelationOptionsFollowConfig) {
    const auto cfg = parse_config("R = 5\nhnsw_m = 8\nindex = exact\nexclude_same_client = true\n");
    const auto opts = cfg.relation_options();
    EXPECT_EQ(opts.related, 5u);
    EXPECT_EQ(opts.hnsw.max_degree, 8);
    EXPECT_EQ(opts.backend, IndexBackend::exact);
    EXPECT_TRUE(opts.query.exclude_same_client);
}
