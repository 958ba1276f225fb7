#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <regex>
#include <set>
#include <string>
#include <vector>

#include "a2p/config.hpp"
#include "a2p/experiment.hpp"
#include "a2p/records.hpp"
#include "a2p/rng.hpp"

using namespace a2p;
namespace fs = std::filesystem;

namespace {

const char* kOneVolumeIni =
    "kind = one-volume\n"
    "spacing = 0.25\n"
    "energy = 10\n"
    "epsilons = 0.3, 0.1\n"
    "samples = 60\n"
    "seed = 3\n"
    "[box]\n"
    "center1 = 0\n"
    "half_side1 = 0.5\n"
    "center2 = 0\n"
    "half_side2 = 0.5\n"
    "[kernel]\n"
    "family = exponential\n";

fs::path scratch(const std::string& name) {
    fs::path dir = fs::path("harness_scratch") / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) { return read_file(p.string()); }

}  // namespace

TEST_CASE("config parsing: sections, comments, typed getters") {
    const Config c = Config::parse_string(
        "# full-line comment\n"
        "top = 7\n"
        "name = alpha beta\n"
        "flag = true\n"
        "ratio = 2.5  # trailing comment\n"
        "grid = 0.1, 0.2 0.3\n"
        "big = 0x10\n"
        "\n"
        "[solver]\n"
        "method = dense\n",
        "test.ini");

    CHECK(c.origin() == "test.ini");
    CHECK(c.has("top"));
    CHECK_FALSE(c.has("missing"));
    CHECK(c.get_long("top") == 7);
    CHECK(c.get_string("name") == "alpha beta");
    CHECK(c.get_bool("flag", false));
    CHECK(c.get_bool("absent", true));
    CHECK(c.get_double("ratio") == 2.5);  // the trailing comment is stripped
    CHECK(c.get_doubles("grid") == std::vector<double>{0.1, 0.2, 0.3});
    CHECK(c.get_u64("big", 0) == 16);  // base prefixes are honored
    CHECK(c.get_u64("nope", 42) == 42);
    CHECK(c.get_string("solver.method") == "dense");
    CHECK(c.get_double("solver.tol", 0.5) == 0.5);
    CHECK(c.unread_keys().empty());
}

TEST_CASE("config parsing: unread keys, canonical form, overrides") {
    Config c = Config::parse_string("b = 2\na = 1\n[s]\nk = 3\n");
    CHECK(c.get_long("a") == 1);
    const std::vector<std::string> unread = c.unread_keys();
    REQUIRE(unread.size() == 2);
    CHECK(unread[0] == "b");
    CHECK(unread[1] == "s.k");

    CHECK(c.canonical() == "a = 1\nb = 2\ns.k = 3\n");
    c.set("b", "9");  // override, no duplicate error
    CHECK(c.get_long("b") == 9);
    CHECK(c.canonical() == "a = 1\nb = 9\ns.k = 3\n");
}

TEST_CASE("config parsing: errors carry the origin and line") {
    CHECK_THROWS_WITH_AS(Config::parse_string("a = 1\na = 2\n", "dup.ini"),
                         doctest::Contains("duplicate key 'a'"), std::runtime_error);
    CHECK_THROWS_WITH_AS(Config::parse_string("a = 1\na = 2\n", "dup.ini"),
                         doctest::Contains("dup.ini:2"), std::runtime_error);
    CHECK_THROWS_WITH_AS(Config::parse_string("[open\n"),
                         doctest::Contains("unterminated section header"),
                         std::runtime_error);
    CHECK_THROWS_WITH_AS(Config::parse_string("justakey\n"),
                         doctest::Contains("expected 'key = value'"), std::runtime_error);
    CHECK_THROWS_WITH_AS(Config::parse_string("bad key! = 1\n"),
                         doctest::Contains("bad key name"), std::runtime_error);

    const Config c = Config::parse_string("n = abc\nlist =  , \n", "t.ini");
    CHECK_THROWS_WITH_AS(c.get_double("n"), doctest::Contains("is not a number"),
                         std::runtime_error);
    CHECK_THROWS_WITH_AS(c.get_long("n"), doctest::Contains("is not an integer"),
                         std::runtime_error);
    CHECK_THROWS_WITH_AS(c.get_bool("n", false), doctest::Contains("is not a boolean"),
                         std::runtime_error);
    CHECK_THROWS_WITH_AS(c.get_doubles("list"), doctest::Contains("holds an empty list"),
                         std::runtime_error);
    CHECK_THROWS_WITH_AS(c.get_string("gone"),
                         doctest::Contains("missing required key 'gone'"),
                         std::runtime_error);
    CHECK_THROWS_WITH_AS(Config::parse_file("no/such/file.ini"),
                         doctest::Contains("cannot open config file"),
                         std::runtime_error);
}

TEST_CASE("config hashing matches the published FNV-1a test vectors") {
    CHECK(fnv1a_hex("") == "cbf29ce484222325");
    CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
    CHECK(fnv1a_hex("foobar") == "85944171f73967e8");
}

TEST_CASE("derived sample streams are deterministic and collision-free") {
    CHECK(derive_stream(7, 0) == derive_stream(7, 0));
    CHECK(derive_stream(7, 0) != derive_stream(8, 0));
    std::set<std::uint64_t> seen;
    for (std::uint64_t i = 0; i < 100000; ++i) seen.insert(derive_stream(12345, i));
    CHECK(seen.size() == 100000);
}

TEST_CASE("json numbers round-trip exactly and stay short") {
    for (double v : {0.1, 1.0 / 3.0, 1e300, 5e-324, -123456.789, 9007199254740993.0,
                     -0.0, 2.5e-15}) {
        const std::string s = json_number(v);
        CHECK(std::strtod(s.c_str(), nullptr) == v);
    }
    CHECK(json_number(0.5) == "0.5");
    CHECK(json_number(1.0) == "1");
    CHECK(json_number(std::numeric_limits<double>::infinity()) == "\"inf\"");
    CHECK(json_number(-std::numeric_limits<double>::infinity()) == "\"-inf\"");
    CHECK(json_number(std::nan("")) == "\"nan\"");
}

TEST_CASE("json strings escape what JSON requires") {
    CHECK(json_string("plain") == "\"plain\"");
    CHECK(json_string("a\"b") == "\"a\\\"b\"");
    CHECK(json_string("a\\b") == "\"a\\\\b\"");
    CHECK(json_string("a\nb\tc\rd") == "\"a\\nb\\tc\\rd\"");
    CHECK(json_string(std::string("x\x01y")) == "\"x\\u0001y\"");
}

TEST_CASE("json records serialize fields in insertion order") {
    JsonRecord r;
    r.field("i", 3).field("x", 0.25).field("ok", true).field("s", "hi");
    r.field_raw("v", json_array(std::vector<long>{1, 2}));
    CHECK(r.str() == "{\"i\":3,\"x\":0.25,\"ok\":true,\"s\":\"hi\",\"v\":[1,2]}");
    CHECK(json_array(std::vector<double>{0.5, 1.5}) == "[0.5,1.5]");
}

TEST_CASE("file helpers write, read and report failures") {
    const fs::path dir = scratch("files");
    const std::string path = (dir / "t.txt").string();
    write_file(path, "hello\n");
    CHECK(read_file(path) == "hello\n");
    CHECK_THROWS_WITH_AS(read_file((dir / "absent.txt").string()),
                         doctest::Contains("cannot open"), std::runtime_error);
}

TEST_CASE("experiment loading: a one-volume config builds the typed view") {
    const ExperimentConfig e =
        experiment_from(Config::parse_string(kOneVolumeIni, "one.ini"));
    CHECK(e.kind == "one-volume");
    CHECK(e.one.box.particle1.half_side == 0.5);
    CHECK(e.one.spacing == 0.25);
    CHECK(e.one.energy == 10.0);
    CHECK(e.one.epsilons == std::vector<double>{0.1, 0.3});  // sorted on load
    CHECK(e.one.samples == 60);
    CHECK(e.one.seed == 3);
    CHECK(e.one.workers == 1);
    CHECK(e.one.coupling == 1.0);
    CHECK(e.one.kernel.scale == 1.0);
    CHECK(e.one.modulus == ModulusMode::GaussianClosedForm);
    CHECK(e.config_hash.size() == 16);
    CHECK(e.out_dir == "run-one-volume-" + e.config_hash.substr(0, 8));
}

TEST_CASE("experiment loading: two-volume, geometry and modulus views") {
    const ExperimentConfig e2 = experiment_from(Config::parse_string(
        "kind = two-volume\nspacing = 0.25\nepsilons = 0.1\nsamples = 50\n"
        "[box]\ncenter1 = 0\nhalf_side1 = 0.5\ncenter2 = 0\nhalf_side2 = 0.5\n"
        "[box2]\ncenter1 = 20\nhalf_side1 = 0.5\ncenter2 = 20\nhalf_side2 = 0.5\n"
        "[kernel]\nfamily = white\nnugget = 1\n"
        "[window]\ncenter = 10\nhalf_width = 1\n"));
    CHECK(e2.two.window_center == 10.0);
    CHECK(e2.two.window_half_width == 1.0);
    CHECK(e2.two.kernel.scale == 0.0);
    CHECK(e2.two.kernel.nugget == 1.0);
    CHECK(e2.two.box2.particle1.center == Point{20.0});

    const ExperimentConfig eg = experiment_from(Config::parse_string(
        "kind = geometry-check\n[geometry]\npairs = 500\ndims = 1 2\n"));
    CHECK(eg.geometry.pairs == 500);
    CHECK(eg.geometry.dims == std::vector<int>{1, 2});

    const ExperimentConfig em = experiment_from(Config::parse_string(
        "kind = modulus\nspacing = 0.25\n"
        "[box]\ncenter1 = 0\nhalf_side1 = 0.5\ncenter2 = 0\nhalf_side2 = 0.5\n"
        "[modulus]\nwidths = 0.5, 1\nmode = closed-form\n"));
    CHECK(em.modulus.widths == std::vector<double>{0.5, 1.0});
    CHECK(em.modulus.mode == ModulusMode::GaussianClosedForm);
}

TEST_CASE("experiment loading: named rejections") {
    auto parse = [](const std::string& text) {
        return experiment_from(Config::parse_string(text, "bad.ini"));
    };
    CHECK_THROWS_WITH_AS(parse("kind = banana\n"),
                         doctest::Contains("unknown kind 'banana'"), std::runtime_error);

    std::string extra = kOneVolumeIni;
    extra += "stray = 1\n";  // lands in the trailing [kernel] section
    CHECK_THROWS_WITH_AS(parse(extra),
                         doctest::Contains("unrecognized key(s): kernel.stray"),
                         std::runtime_error);

    std::string bad_eps = kOneVolumeIni;
    const std::string eps_line = "epsilons = 0.3, 0.1\n";
    bad_eps.replace(bad_eps.find(eps_line), eps_line.size(), "epsilons = 0, 0.1\n");
    CHECK_THROWS_AS(parse(bad_eps), std::invalid_argument);

    CHECK_THROWS_WITH_AS(
        parse("kind = one-volume\nspacing = 0.25\nenergy = 1\nepsilons = 0.1\n"
              "samples = 5\n[box]\ncenter1 = 0\nhalf_side1 = 0.5\ncenter2 = 0\n"
              "half_side2 = 0.5\n[kernel]\nfamily = white\nscale = 1\nnugget = 1\n"),
        doctest::Contains("drop kernel.scale"), std::runtime_error);
    CHECK_THROWS_WITH_AS(
        parse("kind = one-volume\nspacing = 0.25\nenergy = 1\nepsilons = 0.1\n"
              "samples = 5\n[box]\ncenter1 = 0\nhalf_side1 = 0.5\ncenter2 = 0\n"
              "half_side2 = 0.5\n[kernel]\nfamily = white\n"),
        doctest::Contains("positive kernel.nugget"), std::runtime_error);

    // Boxes violating the separation distance rule are rejected up front.
    CHECK_THROWS_AS(
        parse("kind = two-volume\nspacing = 0.25\nepsilons = 0.1\nsamples = 5\n"
              "[box]\ncenter1 = 0\nhalf_side1 = 0.5\ncenter2 = 0\nhalf_side2 = 0.5\n"
              "[box2]\ncenter1 = 2\nhalf_side1 = 0.5\ncenter2 = 2\nhalf_side2 = 0.5\n"
              "[kernel]\nfamily = white\nnugget = 1\n"
              "[window]\ncenter = 10\nhalf_width = 1\n"),
        std::invalid_argument);

    CHECK_THROWS_WITH_AS(
        parse("kind = one-volume\nspacing = 0.25\nepsilons = 0.1\nsamples = 5\n"
              "[box]\ncenter1 = 0\nhalf_side1 = 0.5\ncenter2 = 0\nhalf_side2 = 0.5\n"),
        doctest::Contains("missing required key 'energy'"), std::runtime_error);
}

TEST_CASE("run directories are byte-deterministic across worker counts") {
    const fs::path dir = scratch("det");
    Config c1 = Config::parse_string(kOneVolumeIni, "one.ini");
    c1.set("out", (dir / "w1").string());
    c1.set("workers", "1");
    run_experiment(experiment_from(c1));

    Config c4 = Config::parse_string(kOneVolumeIni, "one.ini");
    c4.set("out", (dir / "w4").string());
    c4.set("workers", "4");
    run_experiment(experiment_from(c4));

    for (const char* name : {"records.jsonl", "summary.json"})
        CHECK(slurp(dir / "w1" / name) == slurp(dir / "w4" / name));
    for (const char* name :
         {"config.ini", "manifest.json", "report.txt", "phat.dat", "rhs.dat"})
        CHECK(fs::exists(dir / "w1" / name));
}

TEST_CASE("report rendering rejects a tampered record stream") {
    const fs::path dir = scratch("tamper");
    Config c = Config::parse_string(kOneVolumeIni, "one.ini");
    c.set("out", (dir / "run").string());
    run_experiment(experiment_from(c));

    const std::string report = render_report((dir / "run").string());
    CHECK(report.find("one-volume") != std::string::npos);

    const fs::path rec = dir / "run" / "records.jsonl";
    const std::string tampered = std::regex_replace(
        slurp(rec), std::regex("\"dmin\":[-0-9.eE+]+"), "\"dmin\":0");
    write_file(rec.string(), tampered);
    CHECK_THROWS_WITH_AS(render_report((dir / "run").string()),
                         doctest::Contains("does not reproduce"), std::runtime_error);
}

TEST_CASE("command line: validate, run, report, and failure exit codes") {
    const fs::path dir = scratch("cli");
    const fs::path cfg = dir / "exp.ini";
    write_file(cfg.string(), kOneVolumeIni);
    const std::string cli = A2P_CLI_PATH;
    const fs::path out = dir / "cli_run";
    const fs::path log = dir / "log.txt";

    auto run = [&](const std::string& args) {
        const std::string cmd = cli + " " + args + " > " + (dir / "log.txt").string() +
                                " 2>&1";
        return std::system(cmd.c_str());
    };

    CHECK(run("validate " + cfg.string()) == 0);
    CHECK(slurp(log).find("ok: kind one-volume") != std::string::npos);

    CHECK(run("run " + cfg.string() + " --out " + out.string()) == 0);
    CHECK(slurp(log).find("wrote ") != std::string::npos);
    CHECK(fs::exists(out / "records.jsonl"));

    CHECK(run("report " + out.string()) == 0);
    CHECK(slurp(log).find("one-volume") != std::string::npos);

    CHECK(run("validate no_such_file.ini") != 0);
    CHECK(slurp(log).find("does not exist") != std::string::npos);

    write_file(cfg.string(), "kind = banana\n");
    CHECK(run("validate " + cfg.string()) != 0);
    CHECK(slurp(log).find("unknown kind") != std::string::npos);
}
