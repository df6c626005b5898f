// Exercises chainqed_run as a user would: through the shell, checking exit
// codes and the files left behind.

#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
    const std::string cmd = std::string(CHAINQED_RUN_BINARY) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("chainqed_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

void write_text(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

}  // namespace

TEST_CASE("version flag") { CHECK(run("--version") == 0); }

TEST_CASE("successful run writes data and manifest") {
    const auto dir = scratch("ok");
    const auto out = dir / "out";
    CHECK(run(std::string(CHAINQED_CONFIG_DIR) + "/two_atom_oracle.json --out " + out.string()) == 0);
    CHECK(fs::exists(out / "two_atom_oracle_two_atom.csv"));
    CHECK(fs::exists(out / "two_atom_oracle_manifest.json"));
    fs::remove_all(dir);
}

TEST_CASE("seed override and no-plots switch") {
    const auto dir = scratch("flags");
    write_text(dir / "c.json", R"({"name": "s", "axis": {"points": 21}, "geometry": {"disorder_sigma": 0.2}})");
    CHECK(run((dir / "c.json").string() + " --seed 5 --no-plots --threads 2 --out " + (dir / "o").string()) == 0);
    CHECK(fs::exists(dir / "o" / "s_spectrum.csv"));
    CHECK_FALSE(fs::exists(dir / "o" / "s_spectrum.svg"));
    fs::remove_all(dir);
}

TEST_CASE("invalid configuration exits with 2 and writes nothing") {
    const auto dir = scratch("bad");
    write_text(dir / "c.json", R"({"geometry": {"n_atom": 8}})");
    CHECK(run((dir / "c.json").string() + " --out " + (dir / "o").string()) == 2);
    CHECK_FALSE(fs::exists(dir / "o"));
    CHECK(run((dir / "missing.json").string()) == 2);
    CHECK(run("--threads 0 " + (dir / "c.json").string()) == 2);
    fs::remove_all(dir);
}

TEST_CASE("numerical failure exits with 3") {
    const auto dir = scratch("num");
    write_text(dir / "c.json",
               R"({"experiment": "snapshots", "system": {"kappa": 0.0}, "geometry": {"n_atoms": 1}})");
    CHECK(run((dir / "c.json").string() + " --out " + (dir / "o").string()) == 3);
    CHECK_FALSE(fs::exists(dir / "o"));
    fs::remove_all(dir);
}

TEST_CASE("unwritable output exits with 4") {
    const auto dir = scratch("io");
    write_text(dir / "blocker", "x");
    CHECK(run(std::string(CHAINQED_CONFIG_DIR) + "/two_atom_oracle.json --out " + (dir / "blocker" / "o").string()) ==
          4);
    fs::remove_all(dir);
}
