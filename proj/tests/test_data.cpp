// Dataset, synthetic scene, and metric tests. The synthetic ground truth is
// checked against an independent midpoint integration of the continuous
// volume rendering integral, not against the renderer it was built with.

#include <gtest/gtest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "waveplanes/data.hpp"
#include "waveplanes/decoder.hpp"
#include "waveplanes/field.hpp"
#include "waveplanes/image_io.hpp"
#include "waveplanes/render.hpp"

namespace {

namespace fs = std::filesystem;

using wvpl::Background;
using wvpl::Dataset;
using wvpl::PngImage;
using wvpl::Split;
using wvpl::SyntheticSceneSpec;

fs::path temp_dir(const std::string& leaf) {
  const fs::path p = fs::path(::testing::TempDir()) / leaf;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

PngImage random_png(int w, int h, int channels, uint64_t seed) {
  PngImage img;
  img.width = w;
  img.height = h;
  img.channels = channels;
  img.pixels.resize(static_cast<size_t>(w) * h * channels);
  std::mt19937_64 rng(seed);
  for (auto& px : img.pixels) px = static_cast<uint8_t>(rng() & 0xff);
  return img;
}

SyntheticSceneSpec small_scene() {
  SyntheticSceneSpec s;
  s.train_frames = 3;
  s.test_frames = 2;
  s.width = 16;
  s.height = 16;
  s.gt_samples = 96;
  return s;
}

TEST(PngIo, RoundTripsRgbAndRgba) {
  const fs::path dir = temp_dir("pngio");
  for (int channels : {3, 4}) {
    const PngImage img = random_png(9, 7, channels, 42 + channels);
    const std::string path = (dir / ("img" + std::to_string(channels) + ".png")).string();
    wvpl::write_png(path, img);
    const PngImage back = wvpl::read_png(path);
    EXPECT_EQ(back.width, img.width);
    EXPECT_EQ(back.height, img.height);
    EXPECT_EQ(back.channels, img.channels);
    EXPECT_EQ(back.pixels, img.pixels);
  }
}

TEST(PngIo, RejectsMissingOrBogusFile) {
  const fs::path dir = temp_dir("pngbad");
  EXPECT_THROW(wvpl::read_png((dir / "absent.png").string()), wvpl::DatasetError);
  std::ofstream((dir / "junk.png").string()) << "not a png at all";
  EXPECT_THROW(wvpl::read_png((dir / "junk.png").string()), wvpl::DatasetError);
}

TEST(PngIo, QuantizeHandValues) {
  EXPECT_EQ(wvpl::quantize_u8(0.0f), 0);
  EXPECT_EQ(wvpl::quantize_u8(1.0f), 255);
  EXPECT_EQ(wvpl::quantize_u8(-0.3f), 0);
  EXPECT_EQ(wvpl::quantize_u8(2.0f), 255);
  EXPECT_EQ(wvpl::quantize_u8(0.5f), 128);  // 127.5 + 0.5 rounds up
}

// --- synthetic scene -------------------------------------------------------

TEST(SyntheticScene, ZeroDensityGivesPureBackground) {
  SyntheticSceneSpec s = small_scene();
  s.peak_density = 0.0;
  const Dataset ds = wvpl::gen_synthetic(s);
  ASSERT_EQ(ds.frames.size(), 5u);
  for (size_t f = 0; f < ds.frames.size(); ++f) {
    for (float a : ds.alphas[f]) EXPECT_EQ(a, 0.0f);
    for (float v : ds.images[f]) EXPECT_EQ(v, 1.0f);  // white background
  }
}

TEST(SyntheticScene, RejectsBlobLeavingBbox) {
  SyntheticSceneSpec s = small_scene();
  s.center_end = {2.0, 0.0, 0.0};
  EXPECT_THROW(wvpl::gen_synthetic(s), wvpl::ConfigError);
}

// Projects a world point through the camera and checks that the alpha argmax
// lands on it. Moderate density keeps the alpha profile unimodal.
TEST(SyntheticScene, AlphaArgmaxTracksProjectedBlobCenter) {
  SyntheticSceneSpec s;
  s.train_frames = 4;
  s.test_frames = 1;
  s.width = 64;
  s.height = 64;
  s.peak_density = 2.0;
  s.gradient = false;
  s.gt_samples = 128;
  const Dataset ds = wvpl::gen_synthetic(s);
  for (size_t f : ds.split_indices(Split::Train)) {
    const auto& rec = ds.frames[f];
    const auto c = wvpl::blob_center(s, rec.time);
    // camera coords of the center: q = R^T (c - eye)
    double q[3];
    for (int i = 0; i < 3; ++i) {
      q[i] = 0;
      for (int r = 0; r < 3; ++r)
        q[i] += rec.pose[r * 4 + i] * (c[r] - rec.pose[r * 4 + 3]);
    }
    ASSERT_LT(q[2], 0.0);
    const double focal = wvpl::focal_from_fov(s.fov_x, s.width);
    const double px = focal * (q[0] / -q[2]) + 0.5 * s.width - 0.5;
    const double py = -focal * (q[1] / -q[2]) + 0.5 * s.height - 0.5;
    size_t best = 0;
    for (size_t i = 1; i < ds.alphas[f].size(); ++i)
      if (ds.alphas[f][i] > ds.alphas[f][best]) best = i;
    const double bx = double(best % s.width), by = double(best / s.width);
    EXPECT_NEAR(bx, px, 1.5) << "frame " << f;
    EXPECT_NEAR(by, py, 1.5) << "frame " << f;
  }
}

TEST(SyntheticScene, ConvergedInSampleCount) {
  SyntheticSceneSpec coarse = small_scene();
  coarse.gt_samples = 192;
  SyntheticSceneSpec fine = coarse;
  fine.gt_samples = 384;
  const auto pose = wvpl::orbit_pose(coarse, 0.7);
  std::vector<float> sc, ac, sf, af;
  wvpl::detail::render_synthetic_frame(coarse, pose, 0.4, sc, ac);
  wvpl::detail::render_synthetic_frame(fine, pose, 0.4, sf, af);
  // compare composited values so the straight-color division at tiny alpha
  // does not amplify the difference
  double worst = 0;
  for (size_t p = 0; p < ac.size(); ++p) {
    worst = std::max(worst, std::abs(double(ac[p]) - af[p]));
    for (int ch = 0; ch < 3; ++ch) {
      const double a = ac[p] * sc[p * 3 + ch] + (1.0 - ac[p]);
      const double b = af[p] * sf[p * 3 + ch] + (1.0 - af[p]);
      worst = std::max(worst, std::abs(a - b));
    }
  }
  EXPECT_LT(worst, 1e-3);
}

// Independent oracle: midpoint rule on the continuous transmittance integral
// with 32768 steps, compared per channel against the stored dataset targets.
TEST(SyntheticScene, MatchesFineContinuousIntegration) {
  const SyntheticSceneSpec s = small_scene();
  const Dataset ds = wvpl::gen_synthetic(s);
  const int probes[][2] = {{8, 8}, {4, 8}, {8, 4}, {12, 12}, {2, 13}};
  int checked = 0;
  for (size_t f : {size_t(0), ds.split_indices(Split::Test)[0]}) {
    const auto& rec = ds.frames[f];
    const wvpl::Camera cam =
        wvpl::make_camera(rec.pose, s.fov_x, s.width, s.height, s.background);
    for (const auto& pr : probes) {
      const wvpl::Ray ray = wvpl::generate_ray(cam, pr[0], pr[1], s.near, s.far);
      const int m = 32768;
      const double dt = (ray.far - ray.near) / m;
      double tau = 0.0, acc[3] = {0, 0, 0};
      for (int i = 0; i < m; ++i) {
        const double t = ray.near + (i + 0.5) * dt;
        const std::array<double, 3> p{ray.origin[0] + t * ray.dir[0],
                                      ray.origin[1] + t * ray.dir[1],
                                      ray.origin[2] + t * ray.dir[2]};
        const double sig = wvpl::blob_density(s, p, rec.time);
        const auto col = wvpl::blob_color(s, p);
        const double trans = std::exp(-(tau + 0.5 * sig * dt));
        for (int ch = 0; ch < 3; ++ch) acc[ch] += trans * sig * col[ch] * dt;
        tau += sig * dt;
      }
      const double resid = std::exp(-tau);
      const size_t idx = static_cast<size_t>(pr[1]) * s.width + pr[0];
      for (int ch = 0; ch < 3; ++ch) {
        const double want = acc[ch] + resid * 1.0;  // white background
        EXPECT_NEAR(ds.images[f][idx * 3 + ch], want, 1e-2)
            << "frame " << f << " px " << pr[0] << "," << pr[1] << " ch " << ch;
      }
      EXPECT_NEAR(ds.alphas[f][idx], 1.0 - resid, 1e-2);
      ++checked;
    }
  }
  EXPECT_EQ(checked, 10);
}

TEST(SyntheticScene, RoundTripsThroughDiskBitExactly) {
  const fs::path dir = temp_dir("roundtrip");
  const SyntheticSceneSpec s = small_scene();
  const Dataset ds = wvpl::gen_synthetic(s);
  wvpl::save_dnerf(ds, dir.string());
  const Dataset back = wvpl::load_dnerf(dir.string(), ds.background);
  ASSERT_EQ(back.frames.size(), ds.frames.size());
  EXPECT_EQ(back.width, ds.width);
  EXPECT_EQ(back.height, ds.height);
  EXPECT_DOUBLE_EQ(back.camera_angle_x, ds.camera_angle_x);
  for (size_t i = 0; i < ds.frames.size(); ++i) {
    EXPECT_EQ(back.frames[i].split, ds.frames[i].split);
    EXPECT_EQ(back.frames[i].file_path, ds.frames[i].file_path);
    EXPECT_DOUBLE_EQ(back.frames[i].time, ds.frames[i].time);
    for (int k = 0; k < 16; ++k)
      EXPECT_DOUBLE_EQ(back.frames[i].pose[k], ds.frames[i].pose[k]) << i << ":" << k;
    EXPECT_EQ(back.raw[i].pixels, ds.raw[i].pixels);
    EXPECT_EQ(back.images[i], ds.images[i]);
    EXPECT_EQ(back.alphas[i], ds.alphas[i]);
  }
  // loading twice is deterministic
  const Dataset again = wvpl::load_dnerf(dir.string(), ds.background);
  for (size_t i = 0; i < ds.frames.size(); ++i)
    EXPECT_EQ(again.images[i], back.images[i]);
}

// --- loader ----------------------------------------------------------------

void write_minimal_json(const fs::path& dir, const std::string& split,
                        const std::string& frames_body) {
  std::ofstream out(dir / ("transforms_" + split + ".json"));
  out << "{\"camera_angle_x\": 0.6911112070083618, \"frames\": [" << frames_body
      << "]}\n";
}

std::string frame_json(const std::string& dir_name, int idx, const std::string& extra) {
  return "{\"file_path\": \"./" + dir_name + "/r_" + std::to_string(idx) + "\", " +
         extra +
         "\"transform_matrix\": [[1,0,0,0],[0,1,0,0],[0,0,1,4],[0,0,0,1]]}";
}

void write_frame_png(const fs::path& dir, const std::string& rel, const PngImage& img) {
  fs::create_directories((dir / rel).parent_path());
  wvpl::write_png((dir / rel).string(), img);
}

TEST(Loader, ParsesMinimalDatasetAndDefaultsTime) {
  const fs::path dir = temp_dir("minimal");
  write_minimal_json(dir, "train", frame_json("train", 0, "\"time\": 0.25, "));
  write_minimal_json(dir, "val", "");
  write_minimal_json(dir, "test", frame_json("test", 0, ""));  // no time key
  PngImage img;
  img.width = 2;
  img.height = 1;
  img.channels = 4;
  img.pixels = {200, 100, 50, 255, 60, 60, 60, 0};
  write_frame_png(dir, "train/r_0.png", img);
  write_frame_png(dir, "test/r_0.png", img);

  const Dataset ds = wvpl::load_dnerf(dir.string(), Background::Black);
  ASSERT_EQ(ds.frames.size(), 2u);
  EXPECT_EQ(ds.width, 2);
  EXPECT_EQ(ds.height, 1);
  EXPECT_NEAR(ds.camera_angle_x, 0.6911112070083618, 1e-15);
  EXPECT_EQ(ds.frames[0].split, Split::Train);
  EXPECT_DOUBLE_EQ(ds.frames[0].time, 0.25);
  EXPECT_EQ(ds.frames[1].split, Split::Test);
  EXPECT_DOUBLE_EQ(ds.frames[1].time, 0.0);  // missing time means static frame
  EXPECT_DOUBLE_EQ(ds.frames[0].pose[11], 4.0);
  // opaque pixel keeps its color, transparent one becomes the background
  EXPECT_FLOAT_EQ(ds.images[0][0], 200.0f / 255.0f);
  EXPECT_FLOAT_EQ(ds.images[0][3], 0.0f);
  EXPECT_FLOAT_EQ(ds.alphas[0][0], 1.0f);
  EXPECT_FLOAT_EQ(ds.alphas[0][1], 0.0f);

  const Dataset white = wvpl::load_dnerf(dir.string(), Background::White);
  EXPECT_FLOAT_EQ(white.images[0][3], 1.0f);
  EXPECT_EQ(white.images[0][0], ds.images[0][0]);  // alpha=1 ignores background
}

TEST(Loader, RejectsBadInput) {
  {  // missing transforms_test.json
    const fs::path dir = temp_dir("nosplit");
    write_minimal_json(dir, "train", "");
    write_minimal_json(dir, "val", "");
    EXPECT_THROW(wvpl::load_dnerf(dir.string(), Background::White), wvpl::DatasetError);
  }
  {  // time outside [0,1]
    const fs::path dir = temp_dir("badtime");
    write_minimal_json(dir, "train", frame_json("train", 0, "\"time\": 1.5, "));
    write_minimal_json(dir, "val", "");
    write_minimal_json(dir, "test", "");
    write_frame_png(dir, "train/r_0.png", random_png(2, 2, 4, 1));
    EXPECT_THROW(wvpl::load_dnerf(dir.string(), Background::White), wvpl::DatasetError);
  }
  {  // image size mismatch across frames
    const fs::path dir = temp_dir("badsize");
    write_minimal_json(dir, "train",
                       frame_json("train", 0, "\"time\": 0.0, ") + "," +
                           frame_json("train", 1, "\"time\": 1.0, "));
    write_minimal_json(dir, "val", "");
    write_minimal_json(dir, "test", "");
    write_frame_png(dir, "train/r_0.png", random_png(2, 2, 4, 1));
    write_frame_png(dir, "train/r_1.png", random_png(3, 2, 4, 2));
    EXPECT_THROW(wvpl::load_dnerf(dir.string(), Background::White), wvpl::DatasetError);
  }
  {  // malformed json
    const fs::path dir = temp_dir("badjson");
    std::ofstream(dir / "transforms_train.json") << "{nope";
    write_minimal_json(dir, "val", "");
    write_minimal_json(dir, "test", "");
    EXPECT_THROW(wvpl::load_dnerf(dir.string(), Background::White), wvpl::DatasetError);
  }
  {  // transform matrix with a short row
    const fs::path dir = temp_dir("badpose");
    std::ofstream(dir / "transforms_train.json")
        << "{\"camera_angle_x\": 0.69, \"frames\": [{\"file_path\": \"./train/r_0\","
           "\"time\": 0.0, \"transform_matrix\": [[1,0,0],[0,1,0,0],[0,0,1,4],"
           "[0,0,0,1]]}]}";
    write_minimal_json(dir, "val", "");
    write_minimal_json(dir, "test", "");
    EXPECT_THROW(wvpl::load_dnerf(dir.string(), Background::White), wvpl::DatasetError);
  }
}

// --- metrics ---------------------------------------------------------------

TEST(Metrics, PsnrHandValues) {
  const std::vector<float> a(300, 0.5f);
  EXPECT_DOUBLE_EQ(wvpl::psnr(a, a), 99.0);
  std::vector<float> b(300, 0.6f);
  EXPECT_NEAR(wvpl::psnr(a, b), 20.0, 1e-5);  // mse 0.01
  EXPECT_THROW(wvpl::psnr(a, std::vector<float>(299, 0.5f)), wvpl::MetricError);
  EXPECT_THROW(wvpl::psnr({}, {}), wvpl::MetricError);
}

TEST(Metrics, PsnrMatchesScalarOracle) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<float> dist(0.0f, 1.0f);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<float> a(123), b(123);
    for (size_t i = 0; i < a.size(); ++i) {
      a[i] = dist(rng);
      b[i] = dist(rng);
    }
    double sq = 0;
    for (size_t i = 0; i < a.size(); ++i)
      sq += (double(a[i]) - b[i]) * (double(a[i]) - b[i]);
    const double want = 10.0 * std::log10(a.size() / sq);
    EXPECT_NEAR(wvpl::psnr(a, b), want, 1e-9);
  }
}

TEST(Metrics, MaskedPsnrSelectsPixels) {
  // two pixels: identical first, off-by-0.1 second
  const std::vector<float> a{0.2f, 0.2f, 0.2f, 0.5f, 0.5f, 0.5f};
  const std::vector<float> b{0.2f, 0.2f, 0.2f, 0.6f, 0.6f, 0.6f};
  EXPECT_DOUBLE_EQ(wvpl::psnr_masked(a, b, {1, 0}), 99.0);
  EXPECT_NEAR(wvpl::psnr_masked(a, b, {0, 1}), 20.0, 1e-5);
  EXPECT_DOUBLE_EQ(wvpl::psnr_masked(a, b, {0, 0}), 99.0);  // empty region
  EXPECT_THROW(wvpl::psnr_masked(a, b, {1, 0, 1}), wvpl::MetricError);
}

TEST(Metrics, DilationGrowsSquares) {
  std::vector<float> alpha(49, 0.0f);
  alpha[3 * 7 + 3] = 1.0f;
  const auto [fg, bg] = wvpl::split_fg_bg(alpha, 7, 7, 1);
  int count = 0;
  for (int y = 0; y < 7; ++y)
    for (int x = 0; x < 7; ++x) {
      const bool inside = std::abs(x - 3) <= 1 && std::abs(y - 3) <= 1;
      EXPECT_EQ(fg[y * 7 + x], inside ? 1 : 0) << x << "," << y;
      EXPECT_EQ(fg[y * 7 + x] + bg[y * 7 + x], 1);  // exact partition
      count += fg[y * 7 + x];
    }
  EXPECT_EQ(count, 9);

  // radius 0 keeps just the thresholded set; 0.5 itself is background
  std::vector<float> half(49, 0.5f);
  half[0] = 0.51f;
  const auto [fg0, bg0] = wvpl::split_fg_bg(half, 7, 7, 0);
  EXPECT_EQ(fg0[0], 1);
  EXPECT_EQ(std::count(fg0.begin(), fg0.end(), 1), 1);

  // corner seed clips at the border
  std::vector<float> corner(49, 0.0f);
  corner[0] = 1.0f;
  const auto [fgc, bgc] = wvpl::split_fg_bg(corner, 7, 7, 2);
  EXPECT_EQ(std::count(fgc.begin(), fgc.end(), 1), 9);  // 3x3 visible quadrant

  EXPECT_THROW(wvpl::split_fg_bg(alpha, 6, 7, 1), wvpl::MetricError);
}

// --- evaluation wiring ------------------------------------------------------

wvpl::ModelConfig eval_config() {
  wvpl::ModelConfig cfg;
  cfg.feature_len = 4;
  cfg.levels = 2;
  cfg.spatial_rows = 16;
  cfg.spatial_cols = 16;
  cfg.time_res = 16;
  cfg.scales = {1, 2};
  cfg.family = "db2";
  wvpl::validate_config(cfg);
  return cfg;
}

// If the dataset targets are exactly what the model renders, every PSNR hits
// the cap. This pins focal/pose/time/background plumbing in evaluate().
TEST(Eval, PerfectTargetsScoreAtCap) {
  const auto cfg = eval_config();
  auto field = wvpl::init_field<double>(cfg, 31);
  const auto cache = wvpl::refresh_cache(field);
  const auto dec = wvpl::init_decoder<double>(cfg.fused_len(), 3, 17);

  Dataset ds;
  ds.camera_angle_x = 0.8;
  ds.width = 10;
  ds.height = 8;
  ds.background = Background::White;
  SyntheticSceneSpec s;  // only used for its orbit geometry
  wvpl::EvalOptions opt;
  opt.samples_per_ray = 12;
  for (int j = 0; j < 2; ++j) {
    wvpl::FrameRecord rec;
    rec.split = Split::Test;
    rec.time = 0.25 + 0.5 * j;
    rec.pose = wvpl::orbit_pose(s, 1.1 + j);
    rec.file_path = "./test/r_" + std::to_string(j);
    wvpl::RenderOptions ropt;
    ropt.samples_per_ray = opt.samples_per_ray;
    ropt.jitter = false;
    const auto img = wvpl::render_image(
        cfg, cache, dec,
        wvpl::make_camera(rec.pose, ds.camera_angle_x, ds.width, ds.height,
                          ds.background),
        rec.time, ropt);
    ds.frames.push_back(rec);
    ds.images.push_back(img.rgb);
    ds.alphas.push_back(img.alpha);
  }

  const auto rep = wvpl::evaluate(cfg, cache, dec, ds, opt);
  ASSERT_EQ(rep.frame_indices.size(), 2u);
  for (size_t i = 0; i < 2; ++i) {
    EXPECT_DOUBLE_EQ(rep.psnr_whole[i], 99.0);
    EXPECT_DOUBLE_EQ(rep.psnr_fg[i], 99.0);
    EXPECT_DOUBLE_EQ(rep.psnr_bg[i], 99.0);
  }
  EXPECT_DOUBLE_EQ(rep.mean_whole, 99.0);
  EXPECT_DOUBLE_EQ(rep.mean_fg, 99.0);
  EXPECT_DOUBLE_EQ(rep.mean_bg, 99.0);

  const auto doc = wvpl::eval_report_json(rep);
  ASSERT_TRUE(doc.contains("frames"));
  ASSERT_EQ(doc["frames"].size(), 2u);
  EXPECT_DOUBLE_EQ(doc["mean"]["psnr"].get<double>(), 99.0);
  EXPECT_DOUBLE_EQ(doc["frames"][1]["time"].get<double>(), 0.75);
}

TEST(Eval, MeansAreFrameMeans) {
  const SyntheticSceneSpec s = small_scene();
  const Dataset ds = wvpl::gen_synthetic(s);
  const auto cfg = eval_config();
  auto field = wvpl::init_field<double>(cfg, 5);
  const auto cache = wvpl::refresh_cache(field);
  const auto dec = wvpl::init_decoder<double>(cfg.fused_len(), 3, 6);
  wvpl::EvalOptions opt;
  opt.samples_per_ray = 8;
  const auto rep = wvpl::evaluate(cfg, cache, dec, ds, opt);
  ASSERT_EQ(rep.psnr_whole.size(), 2u);
  EXPECT_DOUBLE_EQ(rep.mean_whole, (rep.psnr_whole[0] + rep.psnr_whole[1]) / 2.0);
  EXPECT_DOUBLE_EQ(rep.mean_fg, (rep.psnr_fg[0] + rep.psnr_fg[1]) / 2.0);
  // an untrained field scores far below the cap on real targets
  EXPECT_LT(rep.mean_whole, 40.0);
}

TEST(Eval, RejectsDatasetWithoutTestFrames) {
  SyntheticSceneSpec s = small_scene();
  s.test_frames = 0;
  const Dataset ds = wvpl::gen_synthetic(s);
  const auto cfg = eval_config();
  auto field = wvpl::init_field<double>(cfg, 5);
  const auto cache = wvpl::refresh_cache(field);
  const auto dec = wvpl::init_decoder<double>(cfg.fused_len(), 3, 6);
  EXPECT_THROW(wvpl::evaluate(cfg, cache, dec, ds, wvpl::EvalOptions{}),
               wvpl::DatasetError);
}

TEST(Eval, ToPngImageQuantizes) {
  wvpl::Image img;
  img.width = 2;
  img.height = 1;
  img.rgb = {0.0f, 0.5f, 1.0f, 0.25f, 0.75f, 1.5f};
  img.alpha = {0.5f, 1.0f};
  const PngImage rgb = wvpl::to_png_image(img, false);
  EXPECT_EQ(rgb.channels, 3);
  EXPECT_EQ(rgb.pixels, (std::vector<uint8_t>{0, 128, 255, 64, 191, 255}));
  const PngImage rgba = wvpl::to_png_image(img, true);
  EXPECT_EQ(rgba.channels, 4);
  EXPECT_EQ(rgba.pixels[3], 128);
  EXPECT_EQ(rgba.pixels[7], 255);
}

}  // namespace
