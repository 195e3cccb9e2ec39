#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "mhq/cli.hpp"
#include "support/oracles.hpp"

using namespace mhq;

namespace {

struct CliResult {
  int code;
  std::string out, err;
};

CliResult invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "mhq");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  f << text;
}

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

TEST(Mvi, SinglePixelCircleIsFiveLines) {
  const auto img = ManifoldImage<Circle>::constant(Circle{}, GridShape(1, 1), 0.0);
  const std::string text = to_mvi_string(img);
  EXPECT_EQ(text, "MVI1\ncircle\n1 1 1\n1\n0\n");
  EXPECT_EQ(count_lines(text), 5u);
}

TEST(Mvi, SpdHeaderCarriesSize) {
  const auto img = ManifoldImage<Spd>::constant(Spd(2), GridShape(1, 2), Eigen::MatrixXd::Identity(2, 2));
  const std::string text = to_mvi_string(img);
  EXPECT_EQ(text.substr(0, text.find('\n', 9) + 1), "MVI1\nspd\n1 2 4 2\n");
}

TEST(Mvi, RandomRotationRoundTripIsIdenticalText) {
  Rng rng(11);
  auto img = random_smooth_image(Rotations3{}, GridShape(4, 5), rng, 2.0);
  img = img.with_mask(random_mask(img.shape(), 0.3, 5));
  const std::string text = to_mvi_string(img);
  const AnyImage back = parse_mvi(text);
  const auto& r = std::get<ManifoldImage<Rotations3>>(back);
  EXPECT_EQ(to_mvi_string(r), text);
  for (std::size_t i = 0; i < img.size(); ++i) EXPECT_EQ(r[i], img[i]);
  EXPECT_EQ(r.mask().bits(), img.mask().bits());
}

TEST(Mvi, FileRoundTripEveryManifold) {
  const std::string dir = oracle::scratch_dir("mvi_files");
  Rng rng(3);
  int k = 0;
  for (const auto& any : {AnyManifold(Euclidean(3)), AnyManifold(Circle{}), AnyManifold(Sphere2{}),
                          AnyManifold(Rotations3{}), AnyManifold(Spd(3))}) {
    std::visit(
        [&](const auto& m) {
          const auto img = random_smooth_image(m, GridShape(3, 2), rng, 1.0);
          const std::string path = dir + "/img" + std::to_string(k++) + ".mvi";
          save_mvi(img, path);
          const auto text = oracle::read_file(path);
          EXPECT_EQ(text, to_mvi_string(img));
          const auto back = load_mvi_as<std::decay_t<decltype(m)>>(path);
          EXPECT_EQ(to_mvi_string(back), text);
        },
        any);
  }
}

TEST(Mvi, CorruptMagicNamesByteOffset) {
  try {
    parse_mvi("MVJ1\ncircle\n1 1 1\n1\n0\n");
    FAIL() << "expected a parse error";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("byte offset 0"), std::string::npos) << e.what();
  }
}

TEST(Mvi, MalformedHeadersAreRejected) {
  const char* bad[] = {
      "",
      "MVI1\nklein\n1 1 1\n1\n0\n",
      "MVI1\ncircle\n1 1 3\n1\n0 0 0\n",
      "MVI1\ncircle\n1 2 1\n1\n0\n0\n",
      "MVI1\ncircle\n1 1 1\n2\n0\n",
      "MVI1\ncircle\n1 2 1\n11\n0\n",
      "MVI1\ncircle\n1 1 1\n1\nzero\n",
      "MVI1\nspd\n1 1 4\n1\n1 0 0 1\n",
  };
  for (const char* text : bad) EXPECT_THROW(parse_mvi(text), ValidationError) << text;
}

TEST(Mvi, ErrorOffsetPointsAtTheBadToken) {
  const std::string text = "MVI1\ncircle\n1 1 1\n1\nzero\n";
  try {
    parse_mvi(text);
    FAIL();
  } catch (const ValidationError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("byte offset " + std::to_string(text.find("zero"))), std::string::npos) << msg;
  }
}

TEST(Mvi, InvalidKnownPixelReportsIndex) {
  try {
    parse_mvi("MVI1\nsphere2\n1 2 3\n11\n0 0 1\n1 1 0\n");
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("pixel 1 (row 0, col 1"), std::string::npos) << e.what();
  }
}

TEST(Mvi, LoadErrorsNameThePath) {
  const std::string dir = oracle::scratch_dir("mvi_errors");
  const std::string path = dir + "/broken.mvi";
  write_text(path, "MVI2\n");
  try {
    load_mvi(path);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_EQ(std::string(e.what()).rfind(path, 0), 0u) << e.what();
  }
  EXPECT_THROW(load_mvi(dir + "/missing.mvi"), ValidationError);
}

TEST(View, CircleZeroIsRed) {
  const auto px = render(ManifoldImage<Circle>::constant(Circle{}, GridShape(1, 1), 0.0));
  EXPECT_EQ(px[0], (Rgb8{255, 0, 0}));
}

TEST(View, MaskedPixelIsWhite) {
  const GridShape s(2, 2);
  const Mask mask(s, {1, 0, 1, 1});
  for (const auto& any : {AnyManifold(Circle{}), AnyManifold(Sphere2{}), AnyManifold(Rotations3{}),
                          AnyManifold(Spd(2)), AnyManifold(Euclidean(3))}) {
    std::visit(
        [&](const auto& m) {
          Rng rng(1);
          const auto img = random_smooth_image(m, s, rng, 0.5).with_mask(mask);
          const auto px = render(img);
          EXPECT_EQ(px[1], (Rgb8{255, 255, 255})) << m.name();
        },
        any);
  }
}

TEST(View, ConstantImageHasConstantColour) {
  const auto q = Eigen::Vector4d(0.5, 0.5, 0.5, 0.5);
  const auto px = render(ManifoldImage<Rotations3>::constant(Rotations3{}, GridShape(3, 4), q));
  for (const auto& c : px) EXPECT_EQ(c, px[0]);
  Eigen::MatrixXd a(2, 2);
  a << 2, 0.5, 0.5, 1;
  const auto ps = render(ManifoldImage<Spd>::constant(Spd(2), GridShape(2, 3), a));
  for (const auto& c : ps) EXPECT_EQ(c, ps[0]);
}

TEST(View, HueWheelAtQuarterTurns) {
  const auto img = ManifoldImage<Circle>(Circle{}, GridShape(1, 3), {kPi * 2.0 / 3.0, -kPi * 2.0 / 3.0, -kPi});
  const auto px = render(img);
  EXPECT_EQ(px[0], (Rgb8{0, 255, 0}));
  EXPECT_EQ(px[1], (Rgb8{0, 0, 255}));
  EXPECT_EQ(px[2], (Rgb8{0, 255, 255}));
}

TEST(View, PpmFileIsP6) {
  const std::string dir = oracle::scratch_dir("ppm");
  const auto img = ManifoldImage<Circle>::constant(Circle{}, GridShape(2, 3), 0.0);
  export_view(img, dir + "/v.ppm");
  const std::string data = oracle::read_file(dir + "/v.ppm");
  const std::string header = "P6\n3 2\n255\n";
  ASSERT_EQ(data.size(), header.size() + 18);
  EXPECT_EQ(data.substr(0, header.size()), header);
  for (std::size_t i = 0; i < 6; ++i) {
    EXPECT_EQ(static_cast<unsigned char>(data[header.size() + 3 * i]), 255);
    EXPECT_EQ(static_cast<unsigned char>(data[header.size() + 3 * i + 1]), 0);
  }
}

TEST(Cli, BadFlagIsValidationError) {
  EXPECT_EQ(invoke({"denoise", "--no-such-flag"}).code, 2);
  EXPECT_EQ(invoke({}).code, 2);
  EXPECT_EQ(invoke({"denoise", "--lambda", "abc"}).code, 2);
}

TEST(Cli, HelpExitsZero) { EXPECT_EQ(invoke({"--help"}).code, 0); }

TEST(Cli, MissingInputIsValidationError) {
  const auto r = invoke({"denoise"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("exactly one of --in or --preset"), std::string::npos) << r.err;
  EXPECT_EQ(invoke({"eval", "--in", "x.mvi"}).code, 2);
  EXPECT_EQ(invoke({"synth", "--preset", "signal-s1"}).code, 2);
}

TEST(Cli, PresetCommandMismatchIsValidationError) {
  const auto r = invoke({"inpaint", "--preset", "signal-s1"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("denoise"), std::string::npos) << r.err;
  EXPECT_EQ(invoke({"denoise", "--preset", "no-such-preset"}).code, 2);
}

TEST(Cli, BadParametersAreRejectedBeforeLoading) {
  EXPECT_EQ(invoke({"denoise", "--in", "/nonexistent.mvi", "--lambda", "-1"}).code, 2);
  EXPECT_EQ(invoke({"denoise", "--in", "/nonexistent.mvi", "--penalty", "phi9"}).code, 2);
  EXPECT_EQ(invoke({"denoise", "--in", "/nonexistent.mvi", "--eps", "0"}).code, 2);
  EXPECT_EQ(invoke({"denoise", "--in", "/nonexistent.mvi", "--mode", "diagonal"}).code, 2);
  EXPECT_EQ(invoke({"denoise", "--in", "/nonexistent.mvi"}).code, 2);
}

TEST(Cli, InpaintNeedsUnknownPixels) {
  const std::string dir = oracle::scratch_dir("cli_inpaint");
  save_mvi(ManifoldImage<Circle>::constant(Circle{}, GridShape(2, 2), 0.5), dir + "/in.mvi");
  const auto r = invoke({"inpaint", "--in", dir + "/in.mvi"});
  EXPECT_EQ(r.code, 2);
  EXPECT_EQ(invoke({"denoise", "--in", dir + "/in.mvi", "--manifold", "sphere2"}).code, 2);
}

TEST(Cli, CutLocusInputIsSolverError) {
  const std::string dir = oracle::scratch_dir("cli_cut");
  write_text(dir + "/in.mvi", "MVI1\nsphere2\n1 2 3\n11\n0 0 1\n0 0 -1\n");
  const auto r = invoke({"denoise", "--in", dir + "/in.mvi"});
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("solver error"), std::string::npos) << r.err;
}

TEST(Cli, DenoiseWritesOutputViewAndReport) {
  const std::string dir = oracle::scratch_dir("cli_denoise");
  ASSERT_EQ(invoke({"synth", "--manifold", "circle", "--rows", "6", "--cols", "5", "--seed", "4", "--out",
                 dir + "/in.mvi"})
                .code,
            0);
  const auto r = invoke({"denoise", "--in", dir + "/in.mvi", "--ref", dir + "/in.mvi", "--lambda", "0.5", "--out",
                      dir + "/out.mvi", "--view", dir + "/out.ppm"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out.rfind("mhq report\n", 0), 0u);
  for (const char* key : {"\npenalty phi1\n", "\nlambda 0.5\n", "\nenergy_trace\n", "\ndescent_chain ok\n", "\nerr "})
    EXPECT_NE(r.out.find(key), std::string::npos) << key;
  EXPECT_EQ(r.out.find("wall_time"), std::string::npos);
  const auto u = load_mvi_as<Circle>(dir + "/out.mvi");
  EXPECT_EQ(u.shape().rows, 6u);
  EXPECT_EQ(oracle::read_file(dir + "/out.ppm").substr(0, 2), "P6");

  const auto timed = invoke({"denoise", "--in", dir + "/in.mvi", "--timing"});
  EXPECT_NE(timed.out.find("\nwall_time "), std::string::npos);
}

TEST(Cli, ReportFileReplacesStdout) {
  const std::string dir = oracle::scratch_dir("cli_report");
  ASSERT_EQ(invoke({"synth", "--manifold", "sphere2", "--rows", "3", "--cols", "3", "--out", dir + "/in.mvi"}).code, 0);
  const auto r = invoke({"denoise", "--in", dir + "/in.mvi", "--report", dir + "/rep.txt"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(r.out.empty());
  EXPECT_EQ(oracle::read_file(dir + "/rep.txt").rfind("mhq report\n", 0), 0u);
}

TEST(Cli, EvalOfIdenticalImagesIsZero) {
  const std::string dir = oracle::scratch_dir("cli_eval");
  ASSERT_EQ(invoke({"synth", "--manifold", "spd:2", "--rows", "4", "--cols", "4", "--out", dir + "/a.mvi"}).code, 0);
  const auto r = invoke({"eval", "--in", dir + "/a.mvi", "--ref", dir + "/a.mvi"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("\nerr 0\n"), std::string::npos) << r.out;
}

TEST(Cli, EvalRejectsDifferentManifolds) {
  const std::string dir = oracle::scratch_dir("cli_eval_kind");
  ASSERT_EQ(invoke({"synth", "--manifold", "circle", "--rows", "2", "--cols", "2", "--out", dir + "/a.mvi"}).code, 0);
  ASSERT_EQ(invoke({"synth", "--manifold", "sphere2", "--rows", "2", "--cols", "2", "--out", dir + "/b.mvi"}).code, 0);
  EXPECT_EQ(invoke({"eval", "--in", dir + "/a.mvi", "--ref", dir + "/b.mvi"}).code, 2);
}

TEST(Cli, SynthPresetWritesReference) {
  const std::string dir = oracle::scratch_dir("cli_synth");
  const auto r = invoke({"synth", "--preset", "spd-inpaint", "--out", dir + "/in.mvi", "--ref", dir + "/ref.mvi"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto in = load_mvi_as<Spd>(dir + "/in.mvi");
  const auto ref = load_mvi_as<Spd>(dir + "/ref.mvi");
  EXPECT_FALSE(in.mask().all());
  EXPECT_TRUE(in.shape() == ref.shape());
}

TEST(Cli, IdenticalArgumentsGiveIdenticalBytes) {
  const std::string dir = oracle::scratch_dir("cli_determinism");
  ASSERT_EQ(invoke({"synth", "--preset", "field-s2", "--seed", "9", "--out", dir + "/in.mvi", "--ref", dir + "/ref.mvi"}).code,
            0);
  std::string outs[2], reps[2];
  for (int k = 0; k < 2; ++k) {
    const std::string out = dir + "/out" + std::to_string(k) + ".mvi";
    const auto r = invoke({"denoise", "--in", dir + "/in.mvi", "--ref", dir + "/ref.mvi", "--lambda", "0.3", "--eps",
                        "0.1", "--max-iters", "20", "--out", out});
    ASSERT_EQ(r.code, 0) << r.err;
    outs[k] = oracle::read_file(out);
    reps[k] = r.out;
  }
  EXPECT_EQ(outs[0], outs[1]);
  EXPECT_EQ(reps[0], reps[1]);
}

TEST(Cli, BinaryExitCodes) {
  const std::string bin = MHQ_CLI_PATH;
  const auto status = [&](const std::string& args) {
    const int s = std::system((bin + " " + args + " >/dev/null 2>&1").c_str());
    return WIFEXITED(s) ? WEXITSTATUS(s) : -1;
  };
  EXPECT_EQ(status("--help"), 0);
  EXPECT_EQ(status("denoise --bogus"), 2);
  EXPECT_EQ(status("inpaint --preset signal-s1"), 2);
}

TEST(Selfcheck, AllSuitesPass) {
  for (const auto& c : run_selfcheck(3)) EXPECT_TRUE(c.passed) << c.name << " worst " << c.value;
}
