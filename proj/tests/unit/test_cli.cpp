#include <gtest/gtest.h>

#include <fstream>
#include <memory>
#include <sstream>

#include "commands.hpp"
#include "freeseed/checkpoint.hpp"
#include "freeseed/dataset.hpp"
#include "freeseed/image_io.hpp"
#include "test_util.hpp"

using namespace freeseed;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "freeseed");
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

const std::vector<std::string> kTinyScan = {"--image-size", "32", "--views-full", "36", "--detectors", "48"};
const std::vector<std::string> kTinyNets = {"--set", "freenet_width=4",  "--set", "freenet_stages=2",
                                            "--set", "seednet_width=4",  "--set", "seednet_blocks=1",
                                            "--set", "sinonet_width=4",  "--set", "sinonet_stages=2"};

std::vector<std::string> operator+(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

}  // namespace

class Cli : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = std::make_unique<testutil::TempDir>("cli");
    const auto r = run(std::vector<std::string>{"simulate", "--out", data().string(), "--n-views", "6,12", "--count",
                                                "6", "--test-count", "2", "--seed", "7"} +
                       kTinyScan);
    ASSERT_EQ(r.code, 0) << r.err;
  }
  static void TearDownTestSuite() { dir_.reset(); }
  static fs::path data() { return dir_->path() / "data"; }
  static fs::path path(const std::string& name) { return dir_->path() / name; }
  static std::unique_ptr<testutil::TempDir> dir_;
};
std::unique_ptr<testutil::TempDir> Cli::dir_;

TEST_F(Cli, SimulateIsDeterministicAndEchoesConfig) {
  const auto r = run(std::vector<std::string>{"simulate", "--out", path("again").string(), "--n-views", "6,12",
                                              "--count", "6", "--test-count", "2", "--seed", "7"} +
                     kTinyScan);
  ASSERT_EQ(r.code, 0) << r.err;
  for (const char* rel : {"nv006/samples/0000.fsct", "nv012/samples/0005.fsct", "manifest.txt", "geometry.txt"}) {
    EXPECT_EQ(testutil::read_bytes(data() / rel), testutil::read_bytes(path("again") / rel)) << rel;
  }
  EXPECT_FALSE(fs::exists(data() / "nv006/samples/0006.fsct"));
  const auto echo = KeyValues::load(data() / "config.txt");
  EXPECT_EQ(echo.get_string("command"), "simulate");
  EXPECT_EQ(echo.get_int("seed"), 7);

  // The echoed config alone regenerates the same dataset.
  const auto replay = run({"simulate", "--config", (data() / "config.txt").string(), "--out", path("replay").string()});
  ASSERT_NE(replay.code, 0);  // "command" is not a simulate key: configs are strict
  KeyValues clean;
  for (const auto& k : echo.keys()) {
    if (k != "command") clean.set(k, echo.get_string(k));
  }
  clean.set("out", path("replay").string());
  clean.save(path("replay.txt"));
  ASSERT_EQ(run({"simulate", "--config", path("replay.txt").string()}).code, 0);
  EXPECT_EQ(testutil::read_bytes(data() / "nv012/samples/0003.fsct"),
            testutil::read_bytes(path("replay") / "nv012/samples/0003.fsct"));
}

TEST_F(Cli, SimulateDefaultsAndErrors) {
  const auto bad = run(std::vector<std::string>{"simulate", "--out", path("bad").string(), "--n-views", "7",
                                                "--count", "1"} +
                       kTinyScan);
  EXPECT_EQ(bad.code, 2);
  EXPECT_NE(bad.err.find("divisor"), std::string::npos) << bad.err;

  const auto def = run({"simulate", "--out", path("defaults").string(), "--count", "1", "--test-count", "0",
                        "--image-size", "32", "--views-full", "144", "--detectors", "48"});
  ASSERT_EQ(def.code, 0) << def.err;
  EXPECT_EQ(read_manifest(path("defaults")).n_views, (std::vector<int>{18, 36, 72, 144}));

  std::ofstream(path("unknown.txt")) << "out=" << path("x").string() << "\nbogus_key=1\n";
  const auto unknown = run({"simulate", "--config", path("unknown.txt").string()});
  EXPECT_EQ(unknown.code, 2);
  EXPECT_NE(unknown.err.find("bogus_key"), std::string::npos) << unknown.err;
  EXPECT_EQ(run({"simulate", "--no-such-flag"}).code, 2);
  EXPECT_EQ(run({}).code, 2);
}

TEST_F(Cli, TrainWritesLogsCheckpointsAndIsDeterministic) {
  const auto base = std::vector<std::string>{"train", "--data", data().string(), "--n-views", "6", "--epochs", "1"} +
                    kTinyNets;
  const auto a = run(base + std::vector<std::string>{"--out", path("run_a").string()});
  ASSERT_EQ(a.code, 0) << a.err;
  const auto b = run(base + std::vector<std::string>{"--out", path("run_b").string()});
  ASSERT_EQ(b.code, 0) << b.err;
  const auto log = testutil::read_bytes(path("run_a") / "train_log.csv");
  EXPECT_EQ(log, testutil::read_bytes(path("run_b") / "train_log.csv"));
  EXPECT_EQ(lines(log).front(), "epoch,iter,l_art,l_mask,l_total,lr");
  EXPECT_EQ(lines(log).size(), 1u + 2u);  // 4 train samples, batch size 2
  EXPECT_TRUE(fs::exists(path("run_a") / "checkpoint_epoch_001.fsck"));
  const auto ck = Checkpoint::load(path("run_a") / "checkpoint.fsck");
  EXPECT_EQ(ck.meta.get_double("alpha"), 1.0);
  EXPECT_EQ(ck.meta.get_string("variant"), "freeseed");
  EXPECT_EQ(KeyValues::load(path("run_a") / "config.txt").get_string("command"), "train");
}

TEST_F(Cli, ResumeContinuesTheSchedule) {
  const auto base = std::vector<std::string>{"train", "--data", data().string(), "--n-views", "6", "--set",
                                             "lr_halve_every=1"} +
                    kTinyNets;
  ASSERT_EQ(run(base + std::vector<std::string>{"--out", path("full").string(), "--epochs", "2"}).code, 0);
  ASSERT_EQ(run(base + std::vector<std::string>{"--out", path("part").string(), "--epochs", "1"}).code, 0);
  const auto resumed = run(base + std::vector<std::string>{"--out", path("part").string(), "--epochs", "2", "--resume",
                                                           (path("part") / "checkpoint.fsck").string()});
  ASSERT_EQ(resumed.code, 0) << resumed.err;
  EXPECT_NE(resumed.out.find("resuming at epoch 1"), std::string::npos);
  const auto log = testutil::read_bytes(path("part") / "train_log.csv");
  EXPECT_EQ(log, testutil::read_bytes(path("full") / "train_log.csv"));
  EXPECT_NE(log.find(",5e-05"), std::string::npos);
}

TEST_F(Cli, TrainErrors) {
  const auto missing = run({"train", "--data", path("nowhere").string(), "--out", path("r").string()});
  EXPECT_EQ(missing.code, 2);
  const auto alpha = run({"train", "--data", data().string(), "--out", path("r").string(), "--n-views", "6",
                          "--alpha", "0"});
  EXPECT_EQ(alpha.code, 2);
  EXPECT_EQ(run({"train", "--data", data().string(), "--out", path("r").string(), "--n-views", "9"}).code, 2);
  EXPECT_EQ(run({"train", "--data", data().string(), "--out", path("r").string(), "--variant", "nope"}).code, 2);
  EXPECT_EQ(run({"train", "--data", data().string(), "--out", path("r").string(), "--set", "widht=3"}).code, 2);
  const auto diverge = run(std::vector<std::string>{"train", "--data", data().string(), "--out",
                                                    path("nan").string(), "--n-views", "6", "--epochs", "1", "--set",
                                                    "lr=1e30"} +
                           kTinyNets);
  EXPECT_EQ(diverge.code, 3) << diverge.err;
}

TEST_F(Cli, EveryVariantTrainsByName) {
  for (const char* v : {"baseline", "baseline+fourier", "baseline+seednet", "freenet", "freenet-1+mask",
                        "freeseed-l1", "freeseed"}) {
    const auto r = run(std::vector<std::string>{"train", "--data", data().string(), "--out",
                                                path(std::string("variant_") + v).string(), "--n-views", "6",
                                                "--epochs", "1", "--max-batches", "1", "--variant", v} +
                       kTinyNets);
    EXPECT_EQ(r.code, 0) << v << ": " << r.err;
  }
  const auto dual = run(std::vector<std::string>{"train", "--data", data().string(), "--out", path("dual").string(),
                                                 "--n-views", "6", "--epochs", "1", "--max-batches", "1",
                                                 "--dual-domain"} +
                        kTinyNets);
  ASSERT_EQ(dual.code, 0) << dual.err;
  EXPECT_EQ(lines(testutil::read_bytes(path("dual") / "train_log.csv")).front(),
            "epoch,iter,l_art,l_mask,l_total,lr,l_sino,l_rc");
}

TEST_F(Cli, EvalIdentityReproducesFbpRowAndWindowsPng) {
  const auto r = run({"eval", "--data", data().string(), "--out", path("eval").string(), "--identity", "--png",
                      "--png-count", "1", "--windows", "50:500"});
  ASSERT_EQ(r.code, 0) << r.err;
  std::map<std::string, std::string> rows;
  for (const auto& l : lines(testutil::read_bytes(path("eval") / "metrics.csv"))) {
    if (l.rfind("fbp,", 0) == 0) rows["fbp" + l.substr(3)] = l;
    if (l.rfind("identity,", 0) == 0) rows["idn" + l.substr(8)] = l;
  }
  int compared = 0;
  for (const auto& [key, line] : rows) {
    if (key.rfind("fbp", 0) != 0) continue;
    const auto it = rows.find("idn" + key.substr(3));
    ASSERT_NE(it, rows.end()) << key;
    EXPECT_EQ(line.substr(3), it->second.substr(8));
    ++compared;
  }
  EXPECT_EQ(compared, 4);  // 2 test samples at 2 N_v settings
  const std::string table = testutil::read_bytes(path("eval") / "table.txt");
  EXPECT_NE(table.find("N_v=6"), std::string::npos);
  EXPECT_NE(table.find("N_v=12"), std::string::npos);
  EXPECT_NE(table.find("PSNR   SSIM   RMSE"), std::string::npos);

  const Dataset split = load_dataset(data(), 6);
  auto plane = [](const Tensor<float>& t) { return t.cast<double>().reshaped({32, 32}); };
  const Image expect =
      hu_window(plane(split.test[0].full), 50.0, 500.0);  // rightmost panel is the reference image
  const Image png = image_io::read_gray_png(path("eval") / "png" / "fbp_nv006_0000_w50_500.png");
  ASSERT_EQ(png.shape(), (Shape{32, 96}));
  for (int i = 0; i < 32; ++i) {
    for (int j = 0; j < 32; ++j) EXPECT_NEAR(png.at(i, 64 + j), expect.at(i, j), 0.5 / 255.0 + 1e-12);
  }
}

TEST_F(Cli, EvalErrors) {
  EXPECT_EQ(run({"eval", "--data", data().string(), "--out", path("e").string(), "--checkpoint",
                 path("missing.fsck").string()})
                .code,
            2);
  EXPECT_EQ(run({"eval", "--data", data().string(), "--out", path("e").string(), "--windows", "500:50"}).code, 2);
}

TEST_F(Cli, SpectrumCsvOrderedAndRepeatable) {
  const auto a = run({"spectrum", "--data", data().string(), "--out", path("spec_a").string(), "--split", "train"});
  ASSERT_EQ(a.code, 0) << a.err;
  const auto b = run({"spectrum", "--data", data().string(), "--out", path("spec_b").string(), "--split", "train"});
  ASSERT_EQ(b.code, 0) << b.err;
  const auto csv = testutil::read_bytes(path("spec_a") / "centroid.csv");
  EXPECT_EQ(csv, testutil::read_bytes(path("spec_b") / "centroid.csv"));
  const auto rows = lines(csv);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0], "n_views,centroid,fit_d0,fit_w");
  EXPECT_EQ(rows[1].rfind("6,", 0), 0u);
  EXPECT_EQ(rows[2].rfind("12,", 0), 0u);
  EXPECT_TRUE(fs::exists(path("spec_a") / "nv006_spectrum.png"));
  EXPECT_TRUE(fs::exists(path("spec_a") / "nv012_fitted_band.png"));
  EXPECT_EQ(testutil::read_bytes(path("spec_a") / "nv006_spectrum.fsct"),
            testutil::read_bytes(path("spec_b") / "nv006_spectrum.fsct"));
  EXPECT_EQ(run({"spectrum", "--data", path("none").string(), "--out", path("s").string()}).code, 2);
}

TEST_F(Cli, SpectrumOverlaysLearnedBand) {
  ASSERT_EQ(run(std::vector<std::string>{"train", "--data", data().string(), "--out", path("band").string(),
                                         "--n-views", "6", "--epochs", "1", "--max-batches", "1"} +
                kTinyNets)
                .code,
            0);
  const auto r = run({"spectrum", "--data", data().string(), "--out", path("spec_l").string(), "--checkpoint",
                      (path("band") / "checkpoint.fsck").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(path("spec_l") / "nv006_learned_band.png"));
  EXPECT_EQ(lines(testutil::read_bytes(path("spec_l") / "centroid.csv")).front(),
            "n_views,centroid,fit_d0,fit_w,learned_d0,learned_w");
}
