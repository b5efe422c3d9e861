#include <cstdlib>
#include <thread>

#include <gtest/gtest.h>

#include "dotstitch/commands.hpp"
#include "support.hpp"

using namespace dotstitch;
using dotstitch::testing::TempDir;
using dotstitch::testing::write_text;

namespace
{
    int run_cli(const std::string& args)
    {
        const std::string cmd = std::string(DOTSTITCH_CLI_PATH) + " " + args + " >/dev/null 2>&1";
        const int status = std::system(cmd.c_str());
        return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    }

    RunConfig toy_config(const TempDir& dir, std::size_t families, std::size_t per_family)
    {
        dotstitch::testing::write_toy_corpus(dir / "fasta", families, per_family, 17);
        RunConfig cfg;
        cfg.input = dir / "fasta";
        cfg.out = dir / "out";
        cfg.seed = 5;
        cfg.side = 64;
        cfg.repeats = 3;
        return cfg;
    }
}  // namespace

TEST(RunConfig, DefaultsMatchReferenceSettings)
{
    const RunConfig c;
    EXPECT_EQ(c.min_length, 200u);
    EXPECT_EQ(c.max_length, 260u);
    EXPECT_EQ(c.cap, 30u);
    EXPECT_EQ(c.repeats, 20u);
    EXPECT_EQ(c.side, 224u);
    EXPECT_EQ(c.batch_size, 320u);
    EXPECT_EQ(c.ratio, ClassRatio::of(4));
    EXPECT_EQ(c.fold.theta, 3);
    EXPECT_EQ(c.fold.w_gc, 3.0);
    EXPECT_EQ(c.fold.w_au, 2.0);
    EXPECT_EQ(c.fold.w_gu, 1.0);
}

TEST(RunConfig, FileRoundTrip)
{
    RunConfig c;
    apply_config_text(c, "# toy run\ninput = data/fa\n out=o \nseed = 99\nratio = 2:1\nw_gu = 0.5\ntheta=2\n"
                         "split_seed = 4\nbppm_dir = ext\n");
    EXPECT_EQ(c.input, "data/fa");
    EXPECT_EQ(c.out, "o");
    EXPECT_EQ(c.seed, 99u);
    EXPECT_EQ(c.ratio, ClassRatio::of(2));
    EXPECT_EQ(c.fold.w_gu, 0.5);
    EXPECT_EQ(c.fold.theta, 2);
    EXPECT_EQ(c.seed_for("split"), 4u);
    EXPECT_EQ(c.bppm_dir, std::filesystem::path("ext"));

    RunConfig back;
    apply_config_text(back, format_config(c));
    EXPECT_EQ(format_config(back), format_config(c));
}

TEST(RunConfig, RejectsUnknownKeysAndBadValues)
{
    RunConfig c;
    EXPECT_THROW(apply_config_text(c, "colour = blue\n"), usage_error);
    EXPECT_THROW(apply_config_text(c, "seed = -1\n"), usage_error);
    EXPECT_THROW(apply_config_text(c, "cap\n"), usage_error);
    EXPECT_THROW(apply_config_text(c, "ratio = 3:2\n"), usage_error);
}

TEST(StageSeeds, DistinctAndStable)
{
    EXPECT_EQ(stage_seed(1, "split"), stage_seed(1, "split"));
    EXPECT_NE(stage_seed(1, "split"), stage_seed(1, "truncate"));
    EXPECT_NE(stage_seed(1, "split"), stage_seed(2, "split"));
    static_assert(stage_seed(0, "split") != 0);
}

TEST(CmdBppm, OutputsPerSequenceAndSkipsUpToDate)
{
    TempDir dir;
    dotstitch::testing::write_toy_corpus(dir / "fasta", 1, 5, 1);
    const auto first = cmd_bppm(dir / "fasta", dir / "out", {}, 32, 2);
    EXPECT_EQ(first.computed, 5u);
    EXPECT_EQ(first.skipped, 0u);
    for (int m = 0; m < 5; ++m)
    {
        const auto id = "TOY0_" + std::to_string(m);
        const auto seq = load_family_dir(dir / "fasta").find(id);
        const auto b = import_bppm_tsv(dir / "out" / "bppm" / (id + ".tsv"), seq.length());
        EXPECT_EQ(b, base_pair_probabilities(seq, {}));
        EXPECT_EQ(read_png(dir / "out" / dotplot_rel_path(id)).width(), 32u);
    }
    const auto second = cmd_bppm(dir / "fasta", dir / "out", {}, 32, 2);
    EXPECT_EQ(second.computed, 0u);
    EXPECT_EQ(second.skipped, 5u);
}

TEST(CmdBuild, CountIdentitiesOnToyCorpus)
{
    TempDir dir;
    auto cfg = toy_config(dir, 6, 5);
    const auto summary = cmd_build(cfg);
    EXPECT_EQ(summary.split.count(Split::train), 4u);
    EXPECT_EQ(summary.split.count(Split::val), 0u);
    EXPECT_EQ(summary.split.count(Split::test), 2u);

    const auto cnn = read_manifest(cfg.out / cnn_manifest_name);
    const auto sia = read_manifest(cfg.out / siamese_manifest_name);
    const auto cc = count_pairs(cnn);
    const auto sc = count_pairs(sia);
    EXPECT_EQ(cc.at({Split::train, Label::same}), 4u * 5 * 4);
    EXPECT_EQ(cc.at({Split::train, Label::different}), 4u * 3 * 3);
    EXPECT_EQ(cc.at({Split::test, Label::same}), 2u * 5 * 4);
    EXPECT_EQ(cc.at({Split::test, Label::different}), 2u * 5 * 5);
    EXPECT_EQ(sc.at({Split::test, Label::same}), 2u * 5 * 4 / 2);
    EXPECT_EQ(sc.at({Split::test, Label::different}), 5u * 5);
    EXPECT_EQ(cc, summary.cnn_counts);

    for (const auto& r : cnn)
    {
        ASSERT_TRUE(r.image);
        const auto img = read_png(cfg.out / *r.image);
        EXPECT_EQ(img.width(), 64u);
    }
    for (const auto& r : sia)
    {
        EXPECT_LT(r.seq_a, r.seq_b);
        EXPECT_TRUE(std::filesystem::is_regular_file(cfg.out / *r.image_a));
    }
    EXPECT_NE(summary.table.find("train"), std::string::npos);
}

TEST(CmdBuild, RerunIsIdentical)
{
    TempDir dir;
    auto cfg = toy_config(dir, 4, 3);
    cmd_build(cfg);
    const auto first = dotstitch::testing::file_bytes(cfg.out / cnn_manifest_name);
    cmd_build(cfg);
    EXPECT_EQ(dotstitch::testing::file_bytes(cfg.out / cnn_manifest_name), first);
}

TEST(CmdBuild, SingleFamilyIsDataError)
{
    TempDir dir;
    auto cfg = toy_config(dir, 1, 4);
    EXPECT_THROW(cmd_build(cfg), data_error);
    EXPECT_EQ(run_cli("build --input " + cfg.input.string() + " --out " + cfg.out.string()), exit_data);
}

TEST(CmdBuild, ImportsExternalBppms)
{
    TempDir dir;
    auto cfg = toy_config(dir, 3, 2);
    cmd_bppm(cfg.input, dir / "ext", FoldParams{3, 1.5, 1.5, 1.5}, 16, 1);
    cfg.bppm_dir = dir / "ext" / "bppm";
    cmd_build(cfg);
    const auto seq = load_family_dir(cfg.input).find("TOY0_0");
    const auto expected = resize_bilinear(bppm_to_dotplot(base_pair_probabilities(seq, FoldParams{3, 1.5, 1.5, 1.5})),
                                          cfg.side);
    EXPECT_EQ(read_png(cfg.out / dotplot_rel_path("TOY0_0")), expected);

    cfg.bppm_dir = dir / "nowhere";
    EXPECT_THROW(cmd_build(cfg), data_error);
}

TEST(CmdPlan, WritesComposition)
{
    TempDir dir;
    auto cfg = toy_config(dir, 6, 5);
    cmd_build(cfg);
    const auto plan = cmd_plan(cfg.out / cnn_manifest_name, ClassRatio::of(4), 20, 3, 1, dir / "plan.json");
    ASSERT_EQ(plan.batches.size(), 3u);
    const auto j = nlohmann::json::parse(dotstitch::testing::file_bytes(dir / "plan.json"));
    EXPECT_EQ(j["ratio"], "4:1");
    EXPECT_EQ(j["batches"][0]["different"], 16);
    EXPECT_EQ(j["batches"][0]["same"], 4);
    EXPECT_EQ(j["batches"][2]["pair_ids"].size(), 20u);
}

TEST(CmdEval, WritesReports)
{
    TempDir dir;
    std::vector<PairRecord> m{{"a", "x", "y", "F", "G", Label::different, Split::test, {}, {}, {}},
                              {"b", "x", "z", "F", "F", Label::same, Split::test, {}, {}, {}},
                              {"c", "y", "z", "G", "F", Label::different, Split::test, {}, {}, {}}};
    write_manifest(m, dir / "m.jsonl");
    write_text(dir / "p.jsonl", format_predictions({{"a", 0.2, Label::different},
                                                     {"b", 0.8, Label::same},
                                                     {"c", 0.6, Label::different}}));
    const auto table = cmd_eval(dir / "p.jsonl", dir / "m.jsonl", 0.5, dir / "eval");
    EXPECT_NE(table.find("test"), std::string::npos);
    const auto report = nlohmann::json::parse(dotstitch::testing::file_bytes(dir / "eval" / "report.json"));
    EXPECT_EQ(report["splits"][0]["tp"], 1);
    EXPECT_EQ(report["splits"][0]["fp"], 1);
    EXPECT_DOUBLE_EQ(report["splits"][0]["auc"].get<double>(), 1.0);
    EXPECT_EQ(dotstitch::testing::file_bytes(dir / "eval" / "roc_test.csv"), "fpr,tpr\n0,0\n0,1\n0.5,1\n1,1\n");
}

TEST(CmdOracle, HairpinFixture)
{
    const auto text = cmd_oracle("GCAAAGC", {});
    EXPECT_NE(text.find("structures: 4"), std::string::npos);
    EXPECT_NE(text.find("Z (dp): 16\n"), std::string::npos);
    EXPECT_NE(text.find("Z (enumeration): 16\n"), std::string::npos);
    EXPECT_NE(text.find("max |dp - oracle|: 0\n"), std::string::npos);
    EXPECT_NE(text.find("((...))  9"), std::string::npos);
}

TEST(Cli, ExitCodes)
{
    TempDir dir;
    EXPECT_EQ(run_cli("oracle GCAAAGC"), exit_ok);
    EXPECT_EQ(run_cli(""), exit_usage);
    EXPECT_EQ(run_cli("build --seed notanumber"), exit_usage);
    EXPECT_EQ(run_cli("oracle GCNAAGC"), exit_data);
    EXPECT_EQ(run_cli("oracle " + std::string(25, 'G')), exit_usage);

    write_text(dir / "bad" / "F.fasta", ">x\nGCXX\n");
    EXPECT_EQ(run_cli("bppm --input " + (dir / "bad").string() + " --out " + (dir / "o").string()), exit_data);

    EXPECT_EQ(run_cli("bppm --input " + (dir / "missing").string()), exit_io);
    EXPECT_EQ(run_cli("fetch RF00001 --attempts 1 --endpoint http://127.0.0.1:9 --dest " + (dir / "f").string()),
              exit_io);
    EXPECT_EQ(run_cli("fetch RF00001 --endpoint nonsense --dest " + (dir / "f").string()), exit_usage);
}

TEST(Cli, FetchBatchAndIdempotence)
{
    httplib::Server server;
    std::atomic<int> hits{0};
    server.Get(R"(/fam/(RF\d+)\.fasta)", [&](const httplib::Request& req, httplib::Response& res) {
        ++hits;
        res.set_content(">" + req.matches[1].str() + "_1\nGCAU\n", "text/plain");
    });
    const int port = server.bind_to_any_port("127.0.0.1");
    std::thread t([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    TempDir dir;
    const auto url = "http://127.0.0.1:" + std::to_string(port) + "/fam";
    const std::string args = "fetch RF00001 RF00002 RF00003 --dest " + (dir / "f").string();
    ::setenv(rfam_url_env, url.c_str(), 1);
    EXPECT_EQ(run_cli(args), exit_ok);
    EXPECT_EQ(hits, 3);
    EXPECT_EQ(run_cli(args), exit_ok);
    EXPECT_EQ(hits, 3);
    ::unsetenv(rfam_url_env);
    EXPECT_EQ(load_family_dir(dir / "f").family_count(), 3u);

    server.stop();
    t.join();
}

TEST(Cli, ConfigFileAndFlagOverride)
{
    TempDir dir;
    dotstitch::testing::write_toy_corpus(dir / "fasta", 4, 3, 2);
    write_text(dir / "run.cfg", "input = " + (dir / "fasta").string() + "\nout = " + (dir / "a").string()
                                    + "\nside = 16\nrepeats = 1\nseed = 3\n");
    EXPECT_EQ(run_cli("--config " + (dir / "run.cfg").string() + " build"), exit_ok);
    EXPECT_EQ(run_cli("--config " + (dir / "run.cfg").string() + " build --out " + (dir / "b").string()), exit_ok);
    EXPECT_EQ(dotstitch::testing::file_bytes(dir / "a" / cnn_manifest_name),
              dotstitch::testing::file_bytes(dir / "b" / cnn_manifest_name));
    EXPECT_EQ(read_png(dir / "b" / dotplot_rel_path("TOY0_0")).width(), 16u);
}
