#include <catch_amalgamated.hpp>

#include <cstdlib>

#include <sys/wait.h>

#include "chartforge/chartforge.hpp"
#include "temp_dir.hpp"

namespace fs = std::filesystem;
using namespace chartforge;

namespace {

struct Run {
    int rc;
    std::string out;
    std::string err;
};

fs::path work_dir(const std::string& name) {
    const fs::path p = fs::path(CHARTFORGE_WORK_DIR) / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

Run cli(const fs::path& cwd, const std::string& args, const std::string& env = "env -u CHARTFORGE_SEED") {
    const std::string cmd = "cd '" + cwd.string() + "' && " + env + " '" + std::string(CHARTFORGE_CLI) + "' " + args +
                            " > .stdout 2> .stderr";
    const int status = std::system(cmd.c_str());
    Run r{WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(cwd / ".stdout"), slurp(cwd / ".stderr")};
    fs::remove(cwd / ".stdout");
    fs::remove(cwd / ".stderr");
    return r;
}

std::vector<nlohmann::json> jsonl(const fs::path& p) {
    std::vector<nlohmann::json> out;
    std::istringstream in(slurp(p));
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty()) out.push_back(nlohmann::json::parse(line));
    }
    return out;
}

}  // namespace

TEST_CASE("generate writes the requested items") {
    const auto dir = work_dir("gen");
    auto r = cli(dir, "generate --out ds --count radar=2,combo=2");
    REQUIRE(r.rc == 0);
    const auto ds = load_dataset(dir / "ds");
    CHECK(ds.items.size() == 4);
    CHECK(ds.specs.size() == 4);
    CHECK(fs::exists(dir / "ds/images/syn-radar-00001.svg"));
    const auto rm = nlohmann::json::parse(slurp(dir / "ds/run_manifest.json"));
    CHECK(rm.at("subcommand") == "generate");
    CHECK(rm.at("seed") == 42);
    CHECK(rm.at("config").get<std::string>().find("radar=2,combo=2") != std::string::npos);

    r = cli(dir, "generate --out ds --count radar=1");
    CHECK(r.rc == 1);
    CHECK(r.err.find("--force") != std::string::npos);
    fs::create_directories(dir / "ds/keep");
    r = cli(dir, "generate --out ds --count radar=1 --force");
    CHECK(r.rc == 0);
    CHECK(load_dataset(dir / "ds").items.size() == 1);
    CHECK(fs::exists(dir / "ds/keep"));

    CHECK(cli(dir, "generate --out other --count pie=2").rc == 1);
    CHECK(cli(dir, "generate").rc == 1);
    CHECK(cli(dir, "frobnicate").rc == 1);
}

TEST_CASE("generate is reproducible and follows the seed") {
    const auto dir = work_dir("det");
    REQUIRE(cli(dir, "generate --out a --count bar=3,scatter=3").rc == 0);
    REQUIRE(cli(dir, "generate --out b --count bar=3,scatter=3").rc == 0);
    REQUIRE(cli(dir, "generate --out c --count bar=3,scatter=3", "CHARTFORGE_SEED=7").rc == 0);
    CHECK(slurp(dir / "a/items.jsonl") == slurp(dir / "b/items.jsonl"));
    CHECK(slurp(dir / "a/images/syn-bar-00002.svg") == slurp(dir / "b/images/syn-bar-00002.svg"));
    CHECK(slurp(dir / "a/items.jsonl") != slurp(dir / "c/items.jsonl"));
    CHECK(nlohmann::json::parse(slurp(dir / "c/run_manifest.json")).at("seed") == 7);
}

TEST_CASE("settings load from a config file") {
    const auto dir = work_dir("config");
    REQUIRE(cli(dir, "--seed 5 generate --out a --count line=2").rc == 0);
    const std::string text = nlohmann::json::parse(slurp(dir / "a/run_manifest.json")).at("config");
    std::string replayed;
    std::istringstream lines(text);
    bool redirected = false;
    for (std::string line; std::getline(lines, line);) {
        if (line.rfind("out=", 0) == 0) {
            line = "out=\"b\"";
            redirected = true;
        }
        replayed += line + "\n";
    }
    REQUIRE(redirected);
    std::ofstream(dir / "run.toml") << replayed;
    REQUIRE(cli(dir, "--config run.toml").rc == 0);
    CHECK(slurp(dir / "a/items.jsonl") == slurp(dir / "b/items.jsonl"));
}

TEST_CASE("render writes SVG with a sidecar") {
    const auto dir = work_dir("render");
    REQUIRE(cli(dir, "generate --out ds --count area=1").rc == 0);
    REQUIRE(cli(dir, "render --spec ds/charts/syn-area-00000.json --out area.svg").rc == 0);
    CHECK(slurp(dir / "area.svg") == slurp(dir / "ds/images/syn-area-00000.svg"));
    CHECK(nlohmann::json::parse(slurp(dir / "area.meta.json")).at("spec_id") == "syn-area-00000");

    std::ofstream(dir / "bad.json") << R"({"id": "x"})";
    CHECK(cli(dir, "render --spec bad.json --out bad.svg").rc == 1);
}

TEST_CASE("evaluate scores a perfect run at 100") {
    const auto dir = work_dir("eval");
    REQUIRE(cli(dir, "generate --out ds --count box=2,bar=2").rc == 0);
    std::string lines;
    for (const auto& q : load_items(dir / "ds/items.jsonl")) {
        lines += nlohmann::json{{"item_id", q.item_id}, {"raw_text", "<answer>" + format_number(q.answer_gt) + "</answer>"}}.dump() + "\n";
    }
    std::ofstream(dir / "perfect.jsonl") << lines;
    auto r = cli(dir, "evaluate --dataset ds --responses perfect.jsonl --out rep --label perfect");
    REQUIRE(r.rc == 0);
    CHECK(r.out.find("100.00") != std::string::npos);
    const auto rep = nlohmann::json::parse(slurp(dir / "rep/report.json"));
    CHECK(rep.at("overall").at("accuracy") == 100.0);
    CHECK(rep.at("overall").at("n") == 4);

    r = cli(dir, "evaluate --dataset ds --responses missing.jsonl --out rep2");
    CHECK(r.rc == 1);
    CHECK(r.err.find("missing.jsonl") != std::string::npos);

    std::ofstream(dir / "stray.jsonl") << R"({"item_id": "ghost", "raw_text": "1"})" << "\n";
    r = cli(dir, "evaluate --dataset ds --responses stray.jsonl --out rep3");
    CHECK(r.rc == 1);
    CHECK(r.err.find("ghost") != std::string::npos);
}

TEST_CASE("reward and advantages process JSONL") {
    const auto dir = work_dir("reward");
    std::ofstream(dir / "in.jsonl") << R"({"item_id": "a", "raw_text": "<think>x</think><answer>100</answer>", "answer_gt": 100})" "\n"
                                    << R"({"item_id": "b", "raw_text": "<answer>101</answer>", "answer_gt": 100})" "\n"
                                    << R"({"item_id": "c", "raw_text": "<think>x</think><answer>150</answer>", "answer_gt": 100})" "\n"
                                    << R"({"item_id": "d", "raw_text": "no idea", "answer_gt": 100})" "\n";
    REQUIRE(cli(dir, "reward --input in.jsonl --out out.jsonl").rc == 0);
    const auto rows = jsonl(dir / "out.jsonl");
    REQUIRE(rows.size() == 4);
    CHECK(rows[0].at("total") == 2.0);
    CHECK(rows[1].at("total") == 0.25);
    CHECK(rows[2].at("total") == 1.0);
    CHECK(rows[3].at("total") == 0.0);
    CHECK(rows[3].at("d_rel").is_null());

    std::ofstream(dir / "groups.jsonl") << R"({"prompt_id": "p", "rewards": [2, 0]})" "\n"
                                        << R"({"prompt_id": "q", "reward": 1})" "\n"
                                        << R"({"prompt_id": "q", "reward": 1})" "\n";
    auto r = cli(dir, "advantages --input groups.jsonl");
    REQUIRE(r.rc == 0);
    CHECK(r.out == "{\"advantages\":[1.0,-1.0],\"prompt_id\":\"p\"}\n{\"advantages\":[0.0,0.0],\"prompt_id\":\"q\"}\n");

    std::ofstream(dir / "nogt.jsonl") << R"({"item_id": "zz", "raw_text": "1"})" "\n";
    CHECK(cli(dir, "reward --input nogt.jsonl").rc == 1);
}

TEST_CASE("curate boundary prints mixed-outcome items") {
    const auto dir = work_dir("boundary");
    std::ofstream(dir / "log.jsonl") << R"({"item_id":"q1","round_index":0,"correct":true})" "\n"
                                     << R"({"item_id":"q1","round_index":1,"correct":true})" "\n"
                                     << R"({"item_id":"q2","round_index":0,"correct":true})" "\n"
                                     << R"({"item_id":"q2","round_index":1,"correct":false})" "\n"
                                     << R"({"item_id":"q3","round_index":0,"correct":false})" "\n";
    auto r = cli(dir, "curate boundary --log log.jsonl");
    REQUIRE(r.rc == 0);
    CHECK(r.out == "q2\n");
}

TEST_CASE("curate rounds and distill run against a scripted mock") {
    const auto dir = work_dir("mock");
    REQUIRE(cli(dir, "generate --out ds --count bar=3,line=3").rc == 0);
    std::ofstream(dir / "mock.json") << R"({"default": ["<think>hmm</think><answer>3</answer>"]})";
    auto r = cli(dir, "curate rounds --dataset ds --out rounds --mock-script mock.json --plan direct:0,forced_cot:0.9");
    REQUIRE(r.rc == 0);
    CHECK(jsonl(dir / "rounds/log.jsonl").size() == 12);
    CHECK_FALSE(fs::exists(dir / "rounds/cursor.json"));

    std::ofstream(dir / "auth.json") << R"({"default": [{"fail": "auth"}]})";
    r = cli(dir, "curate rounds --dataset ds --out r2 --mock-script auth.json");
    CHECK(r.rc == 2);
    CHECK(fs::exists(dir / "r2/cursor.json"));
    r = cli(dir, "curate rounds --dataset ds --out r2 --mock-script mock.json --resume");
    CHECK(r.rc == 0);
    CHECK(jsonl(dir / "r2/log.jsonl").size() == 24);

    r = cli(dir, "distill --dataset ds --out cot --target 2 --mock-script mock.json");
    CHECK(r.rc == 3);
    const auto stats = nlohmann::json::parse(slurp(dir / "cot/stats.json"));
    CHECK(stats.at("items_tried") == 6);
    CHECK(stats.at("shortfall") == 2 - stats.at("accepted").get<int>());
}

TEST_CASE("import-real stores images and reports rejections") {
    const auto dir = work_dir("import");
    std::ofstream(dir / "x.png") << "PNG";
    std::ofstream(dir / "in.jsonl") << R"({"image":"x.png","question":"q","answer":3,"chart_type":"bar"})" "\n"
                                    << R"({"image":"x.png","question":"q","answer":3,"chart_type":"radar"})" "\n";
    auto r = cli(dir, "import-real --input in.jsonl --store store");
    REQUIRE(r.rc == 0);
    CHECK(jsonl(dir / "store/real_items.jsonl").size() == 1);
    CHECK(jsonl(dir / "store/import_rejections.jsonl").size() == 1);
    CHECK(slurp(dir / "store/images/x.png") == "PNG");
}
