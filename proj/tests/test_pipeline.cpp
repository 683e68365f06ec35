#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "llmceg/errors.hpp"
#include "llmceg/io.hpp"
#include "llmceg/pipeline.hpp"
#include "llmceg/serialize.hpp"

using namespace llmceg;
using namespace llmceg::pipeline;
using nlohmann::json;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("llmceg_pipeline_" + name);
    fs::remove_all(p);
    return p;
}

RunConfig tiny(const fs::path& out) {
    RunConfig c = default_config();
    c.data.n_records = 60;
    c.data.n_members = 30;
    c.data.n_nonmembers = 20;
    c.data.n_general = 10;
    c.data.n_pretrain = 40;
    c.model.d_model = 16;
    c.model.n_layers = 1;
    c.model.n_heads = 2;
    c.pretrain.epochs = 1;
    c.train.epochs = 2;
    c.output_dir = out;
    c.verbose = false;
    return c;
}

std::string slurp(const fs::path& p) { return io::read_file(p); }

int run_cli(const std::string& args) {
    const std::string cmd = std::string(LLMCEG_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void write_json(const fs::path& p, const json& j) { io::atomic_write(p, j.dump()); }

}  // namespace

TEST(Config, DefaultsMatchDeskScale) {
    const RunConfig c = default_config();
    EXPECT_EQ(c.data.n_records, 500u);
    EXPECT_EQ(c.data.n_members, 300u);
    EXPECT_EQ(c.data.n_nonmembers, 200u);
    EXPECT_EQ(c.data.n_general, 50u);
    EXPECT_EQ(c.train.epochs, 10);
    EXPECT_EQ(c.train.batch_size, 8);
    EXPECT_EQ(c.privacy.sweep_epsilons, (std::vector<double>{8.0, 2.0, 0.5}));
    EXPECT_NO_THROW(c.validate());
}

TEST(Config, JsonOverlayAndRoundTrip) {
    const json doc{{"data", {{"n_members", 100}}}, {"privacy", {{"thresholds", {{"t_p", 0.2}}}}}, {"output_dir", "x"}};
    const RunConfig c = config_from_json(doc);
    EXPECT_EQ(c.data.n_members, 100u);
    EXPECT_EQ(c.data.n_nonmembers, 200u);
    EXPECT_EQ(c.privacy.thresholds.t_p, 0.2);
    EXPECT_EQ(c.output_dir, fs::path("x"));
    EXPECT_EQ(config_to_json(config_from_json(config_to_json(c))), config_to_json(c));
}

TEST(Config, EnvOverridesOutputDir) {
    RunConfig c = default_config();
    ::setenv(kOutputDirEnv, "/tmp/elsewhere", 1);
    apply_env_overrides(c);
    ::unsetenv(kOutputDirEnv);
    EXPECT_EQ(c.output_dir, fs::path("/tmp/elsewhere"));
}

TEST(Config, OversizedSplitRejected) {
    RunConfig c = default_config();
    c.data.n_members = 400;
    EXPECT_THROW(c.validate(), SizeError);
}

TEST(GenData, DefaultCountsAndRerunHashes) {
    const fs::path dir = scratch("gen");
    RunConfig c = default_config();
    c.output_dir = dir;
    c.verbose = false;
    const auto first = cmd_gen_data(c);
    EXPECT_EQ(io::read_lines(dir / "data" / "members.txt").size(), 300u);
    EXPECT_EQ(io::read_lines(dir / "data" / "nonmembers.txt").size(), 200u);
    EXPECT_EQ(io::read_lines(dir / "data" / "general.txt").size(), 50u);
    const std::string manifest = slurp(first.manifest_path);
    cmd_gen_data(c);
    EXPECT_EQ(slurp(first.manifest_path), manifest);
    const Corpora loaded = load_corpora(dir / "data");
    EXPECT_EQ(loaded.dataset_hash, first.corpora.dataset_hash);
    EXPECT_EQ(loaded.split.member_sources, first.corpora.split.member_sources);
    fs::remove_all(dir);
}

TEST(Train, DefaultShapedCalibrationAndDeterminism) {
    const fs::path dir = scratch("train");
    RunConfig c = tiny(dir);
    c.data.n_records = 500;
    c.data.n_members = 300;
    c.data.n_nonmembers = 200;
    c.model.d_model = 8;
    c.model.context_len = 24;
    c.train.epochs = 10;
    const auto a = cmd_train(c, 8.0);
    const json trace = json::parse(slurp(a.trace_path));
    EXPECT_NEAR(trace.at("sigma").get<double>(), 0.6927, 0.10 * 0.6927);
    EXPECT_EQ(trace.at("steps").get<long>(), 380);
    const auto b = cmd_train(c, 8.0);
    EXPECT_EQ(a.model.model_hash, b.model.model_hash);

    const auto plain = cmd_train(c, std::nullopt);
    const json pt = json::parse(slurp(plain.trace_path));
    EXPECT_EQ(pt.at("epsilon"), "inf");
    EXPECT_EQ(pt.at("sigma").get<double>(), 0.0);
    fs::remove_all(dir);
}

TEST(Attack, WritesResultAndLosses) {
    const fs::path dir = scratch("attack");
    const RunConfig c = tiny(dir);
    const auto t = cmd_train(c, std::nullopt);
    const auto r = cmd_attack(c, t.model_path, dir / "mia.json", dir / "losses.csv");
    const auto j = json::parse(slurp(dir / "mia.json"));
    EXPECT_EQ(j.get<mia::MiaResult>(), r.result);
    EXPECT_EQ(r.result.n_members, 30u);
    EXPECT_EQ(io::read_lines(dir / "losses.csv").size(), 51u);
    EXPECT_THROW(cmd_attack(c, dir / "none.bin", dir / "x.json", std::nullopt), IoError);
    fs::remove_all(dir);
}

TEST(Utility, BaselineAgainstItselfAndFixture) {
    const fs::path dir = scratch("utility");
    const RunConfig c = tiny(dir);
    const auto t = cmd_train(c, std::nullopt);
    const auto u = cmd_eval_utility(c, t.model_path, t.model_path, dir / "u.json");
    EXPECT_DOUBLE_EQ(u.utility_score, 100.0);
    write_json(dir / "fixture.json", {{"ppl", 119.63}, {"baseline_ppl", 179.91}});
    const auto f = cmd_eval_utility_fixture(dir / "fixture.json", dir / "f.json");
    EXPECT_NEAR(f.utility_score, 150.4, 0.05);
    EXPECT_EQ(json::parse(slurp(dir / "f.json")).get<gauge::UtilityResult>(), f);
    fs::remove_all(dir);
}

TEST(Sweep, FourRowsDeterministicAcrossWorkers) {
    const fs::path a_dir = scratch("sweep_a");
    const fs::path b_dir = scratch("sweep_b");
    RunConfig a = tiny(a_dir);
    a.workers = 1;
    RunConfig b = tiny(b_dir);
    b.workers = 2;
    const auto ra = cmd_sweep(a);
    const auto rb = cmd_sweep(b);
    std::istringstream is(ra.csv);
    int rows = 0, flagged = 0;
    for (std::string l; std::getline(is, l);) {
        if (l.rfind("label", 0) == 0) continue;
        ++rows;
        flagged += l.ends_with(",true") ? 1 : 0;
    }
    EXPECT_EQ(rows, 4);
    EXPECT_GE(flagged, 1);
    EXPECT_EQ(ra.csv, rb.csv);
    EXPECT_EQ(slurp(ra.manifest_path), slurp(rb.manifest_path));
    ASSERT_EQ(ra.results.size(), rb.results.size());
    for (std::size_t i = 0; i < ra.results.size(); ++i)
        EXPECT_EQ(ra.results[i].model.model_hash, rb.results[i].model.model_hash);
    EXPECT_EQ(ra.results[0].model.label, "baseline");
    EXPECT_EQ(ra.results[1].model.epsilon, 8.0);
    EXPECT_EQ(ra.results[3].model.epsilon, 0.5);
    EXPECT_TRUE(fs::exists(a_dir / "sweep_report.md"));
    fs::remove_all(a_dir);
    fs::remove_all(b_dir);
}

TEST(Audit, ZeroAdvantageThresholdIsInfeasible) {
    const fs::path dir = scratch("audit");
    RunConfig c = tiny(dir);
    c.privacy.thresholds.t_p = 0.0;
    const auto r = cmd_audit(c);
    EXPECT_EQ(r.report.verdict, gauge::Verdict::infeasible);
    EXPECT_LE(static_cast<int>(r.report.iterations.size()), c.privacy.schedule.max_iterations);
    EXPECT_EQ(gauge::parse_report_json(slurp(r.json_path)), r.report);
    EXPECT_TRUE(fs::exists(r.markdown_path));
    fs::remove_all(dir);
}

TEST(Report, VerdictFromStoredResults) {
    const fs::path dir = scratch("report");
    const RunConfig c = tiny(dir);
    write_json(dir / "mia.json", json(mia::MiaResult{0.1, 0.858, 0.85, 0.358, 0.876, 1.0, 300, 200}));
    write_json(dir / "u.json", json(gauge::make_utility(179.91, 179.91)));
    EXPECT_EQ(cmd_report(c, dir / "mia.json", dir / "u.json", std::nullopt).report.verdict,
              gauge::Verdict::privacy_fail);
    write_json(dir / "mia.json", json(mia::MiaResult{0.03, 0.602, 0.6, 0.102, 0.515, 1.0, 300, 200}));
    write_json(dir / "u.json", json(gauge::make_utility(119.63, 179.91)));
    const auto ok = cmd_report(c, dir / "mia.json", dir / "u.json", std::nullopt);
    EXPECT_EQ(ok.report.verdict, gauge::Verdict::accepted);
    EXPECT_TRUE(gauge::verdict_consistent(ok.report));
    fs::remove_all(dir);
}

TEST(Cli, ExitCodes) {
    const fs::path dir = scratch("cli");
    fs::create_directories(dir);
    const std::string out = " -q -o " + dir.string();
    EXPECT_EQ(run_cli("gen-data" + out), 0);
    EXPECT_EQ(run_cli("gen-data --seed 5" + out), 0);
    write_json(dir / "big.json", {{"data", {{"n_records", 10}, {"n_members", 8}, {"n_nonmembers", 8}}}});
    EXPECT_EQ(run_cli("gen-data -c " + (dir / "big.json").string() + out), 1);
    EXPECT_EQ(run_cli("attack --model " + (dir / "missing.bin").string() + out), 1);

    write_json(dir / "mia_bad.json", json(mia::MiaResult{0.1, 0.858, 0.85, 0.358, 0.876, 1.0, 300, 200}));
    write_json(dir / "mia_ok.json", json(mia::MiaResult{0.03, 0.602, 0.6, 0.102, 0.515, 1.0, 300, 200}));
    write_json(dir / "fixture.json", {{"ppl", 119.63}, {"baseline_ppl", 179.91}});
    EXPECT_EQ(run_cli("eval-utility --ppl-fixture " + (dir / "fixture.json").string() + " --out " +
                      (dir / "u.json").string() + out),
              0);
    const std::string u = " --utility " + (dir / "u.json").string();
    EXPECT_EQ(run_cli("report --mia " + (dir / "mia_ok.json").string() + u + out), 0);
    EXPECT_EQ(run_cli("report --mia " + (dir / "mia_bad.json").string() + u + out), 2);
    EXPECT_EQ(run_cli("report --min-utility 200 --mia " + (dir / "mia_ok.json").string() + u + out), 3);
    EXPECT_EQ(run_cli("no-such-command"), 1);
    EXPECT_EQ(run_cli("--help"), 0);
    fs::remove_all(dir);
}
