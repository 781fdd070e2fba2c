#include <doctest.h>

#include "coneray/cli.hpp"
#include "coneray/config.hpp"

#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

using namespace coneray;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run(std::vector<std::string> args) {
    std::ostringstream out;
    std::ostringstream err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

class TempDir {
public:
    TempDir() : path_(fs::temp_directory_path() / ("coneray_cli_" + std::to_string(counter_++))) {
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    const fs::path& path() const { return path_; }
    std::string operator/(const std::string& name) const { return (path_ / name).string(); }

private:
    static inline int counter_ = 0;
    fs::path path_;
};

std::string write_config(const TempDir& dir, const std::string& name, const json& doc) {
    const std::string p = dir / name;
    std::ofstream(p) << doc.dump(2);
    return p;
}

json small(const char* preset, int n = 16) {
    json doc = preset_config(preset);
    if (doc["mesh"]["kind"] == "disk") {
        doc["mesh"]["n_r"] = n;
        doc["mesh"]["n_theta"] = 2 * n;
    } else {
        doc["mesh"]["nx"] = n;
        doc["mesh"]["ny"] = n;
    }
    return doc;
}

} // namespace

TEST_CASE("example emits a parseable config") {
    const Run r = run({"example", "--name", "kirchhoff-disk"});
    CHECK(r.code == exit_ok);
    const json doc = json::parse(r.out);
    CHECK(parse_config(doc).digest == load_config("preset:kirchhoff-disk").digest);

    TempDir dir;
    CHECK(run({"example", "--name", "linear-square", "--out", dir / "sq.json"}).code == exit_ok);
    CHECK(load_config(dir / "sq.json").digest == load_config("preset:linear-square").digest);

    CHECK(run({"example", "--name", "nope"}).code == exit_config);
    CHECK(run({"example", "--name", "kirchhoff-disk", "--emit", "mesh"}).code == exit_config);
}

TEST_CASE("usage errors exit 1") {
    CHECK(run({}).code == exit_config);
    CHECK(run({"frobnicate"}).code == exit_config);
    CHECK(run({"solve", "preset:linear-disk"}).code == exit_config);
    CHECK(run({"solve", "preset:linear-disk", "--rho", "abc"}).code == exit_config);
    CHECK(run({"--help"}).code == exit_ok);
}

TEST_CASE("solve writes the eigenpair") {
    TempDir dir;
    const std::string cfg = write_config(dir, "kirchhoff.json", small("kirchhoff-disk"));
    const Run r = run({"solve", cfg, "--rho", "1", "--out", dir / "out"});
    REQUIRE(r.code == exit_ok);
    const json e = json::parse(slurp(dir.path() / "out" / "eigenpair.json"));
    CHECK(e["status"] == "ok");
    CHECK(e["rho"] == 1.0);
    CHECK(e["lambda"].get<double>() > 0.0);
    CHECK(e["residual"].get<double>() <= 1e-6);
    CHECK(e["digest"] == load_config(cfg).digest);
    const json meta = json::parse(slurp(dir.path() / "out" / "meta.json"));
    CHECK(meta["command"] == "solve");
    CHECK(meta["digest"] == e["digest"]);

    std::istringstream csv(slurp(dir.path() / "out" / "u1.csv"));
    std::string line;
    std::getline(csv, line);
    CHECK(line == "x1,x2,value,du_dx1,du_dx2");
    std::size_t rows = 0;
    double min_value = INFINITY;
    while (std::getline(csv, line)) {
        ++rows;
        const auto third = line.find(',', line.find(',') + 1);
        min_value = std::min(min_value, std::stod(line.substr(third + 1)));
    }
    CHECK(rows == load_config(cfg).mesh->size());
    CHECK(min_value >= 0.0);
    CHECK(fs::exists(dir.path() / "out" / "u2.csv"));
}

TEST_CASE("solve preconditions") {
    TempDir dir;
    CHECK(run({"solve", "preset:linear-disk", "--rho", "0", "--out", dir / "a"}).code == exit_config);
    CHECK(run({"solve", "preset:linear-disk", "--rho", "-1", "--out", dir / "a"}).code == exit_config);
    CHECK(run({"solve", "preset:linear-disk", "--rho", "1", "--relax", "0", "--out", dir / "a"}).code ==
          exit_config);
    CHECK(run({"solve", dir / "missing.json", "--rho", "1", "--out", dir / "a"}).code == exit_config);
    CHECK_FALSE(fs::exists(dir.path() / "a"));
}

TEST_CASE("a non-elliptic operator is a config error") {
    TempDir dir;
    json doc = small("linear-disk", 8);
    doc["components"][0]["operator"]["a"] = json::array({json::array({1, 0}), json::array({0, -1})});
    const Run r = run({"solve", write_config(dir, "bad.json", doc), "--rho", "1", "--out", dir / "o"});
    CHECK(r.code == exit_config);
    CHECK(r.err.find("config error") != std::string::npos);
}

TEST_CASE("non-convergence exits 2") {
    TempDir dir;
    const std::string cfg = write_config(dir, "kirchhoff.json", small("kirchhoff-disk", 8));
    const Run r = run({"solve", cfg, "--rho", "1", "--max-iter", "2", "--out", dir / "o"});
    CHECK(r.code == exit_no_convergence);
    CHECK(json::parse(slurp(dir.path() / "o" / "eigenpair.json"))["status"] == "max_iterations");

    json dead = small("linear-disk", 8);
    dead["components"][0]["f"] = "0";
    CHECK(run({"solve", write_config(dir, "dead.json", dead), "--rho", "1", "--out", dir / "d"}).code ==
          exit_no_convergence);
    CHECK(run({"sweep", write_config(dir, "dead2.json", dead), "--rho-min", "0.5", "--rho-max", "1", "--points",
               "2", "--out", dir / "s"})
              .code == exit_no_convergence);

    json bad = small("linear-disk", 8);
    bad["components"][0]["f"] = "log(u1 - 10)";
    CHECK(run({"solve", write_config(dir, "log.json", bad), "--rho", "1", "--out", dir / "l"}).code ==
          exit_no_convergence);
}

TEST_CASE("single-point sweep equals solve") {
    TempDir dir;
    const std::string cfg = write_config(dir, "kirchhoff.json", small("kirchhoff-disk"));
    REQUIRE(run({"solve", cfg, "--rho", "0.75", "--out", dir / "a"}).code == exit_ok);
    REQUIRE(run({"sweep", cfg, "--rho-min", "0.75", "--rho-max", "1", "--points", "1", "--out", dir / "b"}).code ==
            exit_ok);
    const json a = json::parse(slurp(dir.path() / "a" / "eigenpair.json"));
    const json b = json::parse(slurp(dir.path() / "b" / "branch.json"));
    REQUIRE(b["records"].size() == 1);
    CHECK(b["records"][0] == a);
}

TEST_CASE("linear sweep has constant lambda") {
    TempDir dir;
    const std::string cfg = write_config(dir, "lin.json", small("linear-square", 24));
    REQUIRE(run({"sweep", cfg, "--rho-min", "0.5", "--rho-max", "2", "--points", "3", "--log-spacing", "--out",
                 dir / "s"})
                .code == exit_ok);
    std::istringstream csv(slurp(dir.path() / "s" / "branch.csv"));
    std::string line;
    std::getline(csv, line);
    CHECK(line == "rho,lambda,residual,iterations,status");
    std::vector<double> rhos;
    std::vector<double> lambdas;
    while (std::getline(csv, line)) {
        std::istringstream row(line);
        std::string cell;
        std::getline(row, cell, ',');
        rhos.push_back(std::stod(cell));
        std::getline(row, cell, ',');
        lambdas.push_back(std::stod(cell));
        CHECK(line.ends_with(",ok"));
    }
    REQUIRE(lambdas.size() == 3);
    CHECK(rhos[1] == doctest::Approx(1.0).epsilon(1e-15));
    for (double l : lambdas) {
        CHECK(std::abs(l - lambdas[0]) <= 1e-8 * lambdas[0]);
    }
    CHECK(run({"sweep", cfg, "--rho-min", "2", "--rho-max", "1", "--out", dir / "t"}).code == exit_config);
    CHECK(run({"sweep", cfg, "--rho-min", "1", "--rho-max", "2", "--points", "0", "--out", dir / "t"}).code ==
          exit_config);
}

TEST_CASE("check on the example") {
    TempDir dir;
    const std::string cfg = write_config(dir, "kirchhoff.json", small("kirchhoff-disk"));
    const Run r = run({"check", cfg, "--rho", "1", "--samples", "100", "--seed", "3", "--out", dir / "c"});
    REQUIRE(r.code == exit_ok);
    const json rep = json::parse(slurp(dir.path() / "c" / "report.json"));
    for (const char* c : {"a", "b", "c", "d"}) {
        CHECK(rep["conditions"][c] == "supported");
    }
    CHECK(rep["seed"] == 3);
    CHECK(rep["phi"]["component"] == 1);
    const double phi = 1 / (8 * std::numbers::pi + 4 * std::numbers::e);
    CHECK(std::abs(rep["phi"]["max"].get<double>() - phi) <= 1e-2 * phi);
    CHECK(rep["note"].get<std::string>().find("not proofs") != std::string::npos);
}

TEST_CASE("check reports violations with exit 3") {
    TempDir dir;
    json doc = small("kirchhoff-disk", 8);
    doc["hypotheses"]["components"][0]["w_hi"] = 0.5;
    const Run r = run({"check", write_config(dir, "t.json", doc), "--samples", "20", "--out", dir / "c"});
    CHECK(r.code == exit_violated);
    const json rep = json::parse(slurp(dir.path() / "c" / "report.json"));
    CHECK(rep["conditions"]["a"] == "violated");
    bool found = false;
    for (const auto& q : rep["quantities"]) {
        if (q["name"] == "w1") {
            found = true;
            CHECK(q["witness"]["kind"] == "zero_state");
            CHECK(q["witness"]["value"] == 1.0);
        }
    }
    CHECK(found);
}

TEST_CASE("check preconditions") {
    TempDir dir;
    CHECK(run({"check", "preset:linear-disk", "--out", dir / "c"}).code == exit_config);
    const std::string cfg = write_config(dir, "kirchhoff.json", small("kirchhoff-disk", 8));
    CHECK(run({"check", cfg, "--samples", "0", "--out", dir / "c"}).code == exit_config);
    CHECK(run({"check", cfg, "--rho", "0", "--out", dir / "c"}).code == exit_config);
}

TEST_CASE("data files are byte-identical across runs") {
    TempDir dir;
    const std::string cfg = write_config(dir, "kirchhoff.json", small("kirchhoff-disk"));
    for (const char* out : {"c1", "c2"}) {
        REQUIRE(run({"check", cfg, "--rho", "0.5", "--samples", "50", "--seed", "9", "--out", dir / out}).code ==
                exit_ok);
    }
    CHECK(slurp(dir.path() / "c1" / "report.json") == slurp(dir.path() / "c2" / "report.json"));
    for (const char* out : {"s1", "s2"}) {
        REQUIRE(run({"sweep", cfg, "--rho-min", "0.25", "--rho-max", "1", "--points", "3", "--out", dir / out})
                    .code == exit_ok);
    }
    CHECK(slurp(dir.path() / "s1" / "branch.csv") == slurp(dir.path() / "s2" / "branch.csv"));
    CHECK(slurp(dir.path() / "s1" / "branch.json") == slurp(dir.path() / "s2" / "branch.json"));

    REQUIRE(run({"check", cfg, "--rho", "0.5", "--samples", "50", "--seed", "10", "--out", dir / "c3"}).code ==
            exit_ok);
    CHECK(slurp(dir.path() / "c1" / "report.json") != slurp(dir.path() / "c3" / "report.json"));
}
