// waveplane: train, render, evaluate, and compress wavelet-plane radiance
// fields. Exit codes: 0 success, 1 usage error, 2 data/model error.

#include <CLI11.hpp>

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "waveplanes/codec.hpp"
#include "waveplanes/config.hpp"
#include "waveplanes/data.hpp"
#include "waveplanes/optim.hpp"
#include "waveplanes/render.hpp"
#include "waveplanes/threading.hpp"

namespace {

namespace fs = std::filesystem;

int resolve_workers(int flag) { return flag >= 1 ? flag : wvpl::default_workers(); }

wvpl::DecodedModel load_model(const std::string& path) {
  return wvpl::decompress_model(wvpl::read_bytes(path));
}

std::string frame_file(const std::string& dir, int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "frame_%04d.png", index);
  return (fs::path(dir) / buf).string();
}

wvpl::Dataset load_dataset(const wvpl::RunConfig& rc) {
  if (rc.data.kind == "synthetic") return wvpl::gen_synthetic(rc.data.synthetic);
  return wvpl::load_dnerf(rc.data.path, rc.data.background);
}

std::vector<wvpl::TrainRay<double>> build_train_rays(const wvpl::Dataset& ds,
                                                     double near, double far) {
  std::vector<wvpl::TrainRay<double>> rays;
  for (size_t f : ds.split_indices(wvpl::Split::Train)) {
    const wvpl::Camera cam = wvpl::make_camera(ds.frames[f].pose, ds.camera_angle_x,
                                               ds.width, ds.height, ds.background);
    wvpl::validate_camera(cam);
    for (int py = 0; py < ds.height; ++py)
      for (int px = 0; px < ds.width; ++px) {
        const wvpl::Ray r = wvpl::generate_ray(cam, px, py, near, far);
        wvpl::TrainRay<double> tr;
        tr.origin = r.origin;
        tr.dir = r.dir;
        tr.t = ds.frames[f].time;
        const size_t idx = (static_cast<size_t>(py) * ds.width + px) * 3;
        for (int c = 0; c < 3; ++c) tr.target[c] = ds.images[f][idx + c];
        rays.push_back(tr);
      }
  }
  return rays;
}

void print_plane_table(const wvpl::WaveletField<float>& field) {
  const auto ids = wvpl::active_planes(field.config);
  std::printf("%-6s %12s %12s %8s\n", "plane", "nonzero", "coeffs", "zero%");
  for (size_t p = 0; p < ids.size(); ++p) {
    size_t nz = 0, total = 0;
    wvpl::for_each_grid(field.planes[p], [&](const wvpl::Grid<float>& g) {
      total += g.v.size();
      for (float v : g.v)
        if (v != 0.0f) ++nz;
    });
    std::printf("%-6s %12zu %12zu %7.2f%%\n", wvpl::plane_name(ids[p]), nz, total,
                100.0 * (1.0 - double(nz) / double(total)));
  }
}

struct TrainArgs {
  std::string config;
  int64_t seed = -1;
  int threads = 0;
};

int cmd_train(const TrainArgs& a) {
  wvpl::RunConfig rc = wvpl::load_run_config(a.config);
  if (a.seed >= 0) rc.train.seed = static_cast<uint64_t>(a.seed);
  const int workers = resolve_workers(a.threads);
  fs::create_directories(rc.output.directory);
  wvpl::save_run_config(rc, (fs::path(rc.output.directory) / "config.json").string());

  const wvpl::Dataset ds = load_dataset(rc);
  if (rc.data.kind == "synthetic")  // materialize so eval can reload the same data
    wvpl::save_dnerf(ds, (fs::path(rc.output.directory) / "dataset").string());
  const auto rays = build_train_rays(ds, rc.train.near, rc.train.far);
  auto field = wvpl::init_field<double>(rc.model, rc.train.seed);
  auto dec = wvpl::init_decoder<double>(rc.model.fused_len(),
                                        rc.model.decoder_hidden_layers,
                                        rc.train.seed + 1);

  wvpl::TrainOptions opt;
  opt.steps = rc.train.steps;
  opt.batch_size = rc.train.batch_size;
  opt.lr = rc.train.lr;
  opt.warmup = rc.train.warmup;
  opt.weights = rc.train.weights;
  opt.seed = rc.train.seed;
  opt.batch.samples_per_ray = rc.train.samples_per_ray;
  opt.batch.near = rc.train.near;
  opt.batch.far = rc.train.far;
  opt.batch.jitter = true;
  opt.batch.background = wvpl::background_rgb(ds.background);
  opt.batch.workers = workers;

  // validation render target: first val frame, else test, else train
  size_t val_frame = 0;
  for (wvpl::Split s : {wvpl::Split::Val, wvpl::Split::Test, wvpl::Split::Train}) {
    const auto idx = ds.split_indices(s);
    if (!idx.empty()) {
      val_frame = idx[0];
      break;
    }
  }

  std::ofstream log(fs::path(rc.output.directory) / "train_log.csv");
  if (!log) throw wvpl::ConfigError("cannot write train log in " + rc.output.directory);
  const auto on_step = [&](int step, double, const wvpl::LossBreakdown& lb) {
    const bool render_now =
        rc.train.render_every > 0 &&
        (step % rc.train.render_every == 0 || step == rc.train.steps);
    if (render_now) {
      const auto cache = wvpl::refresh_cache(field, static_cast<uint64_t>(step));
      const wvpl::Camera cam =
          wvpl::make_camera(ds.frames[val_frame].pose, ds.camera_angle_x, ds.width,
                            ds.height, ds.background);
      wvpl::RenderOptions ropt;
      ropt.samples_per_ray = rc.train.samples_per_ray;
      ropt.near = rc.train.near;
      ropt.far = rc.train.far;
      ropt.workers = workers;
      const auto img =
          wvpl::render_image(rc.model, cache, dec, cam, ds.frames[val_frame].time, ropt);
      char buf[32];
      std::snprintf(buf, sizeof(buf), "val_%06d.png", step);
      wvpl::write_png((fs::path(rc.output.directory) / buf).string(),
                      wvpl::to_png_image(img));
      std::cout << "step " << step << "  loss " << lb.total << "  mse " << lb.mse
                << '\n';
    }
  };

  const auto last = wvpl::fit(field, dec, rays, opt, &log, on_step);
  const auto bytes = wvpl::compress_model(wvpl::cast_field(field),
                                          wvpl::cast_decoder(dec), 0.0,
                                          wvpl::CodecBackend::Raw);
  const std::string ckpt = (fs::path(rc.output.directory) / "model.wvck").string();
  wvpl::write_bytes(ckpt, bytes);
  std::cout << "trained " << rc.train.steps << " steps, final mse " << last.mse
            << ", checkpoint " << ckpt << '\n';
  return 0;
}

struct RenderArgs {
  std::string model;
  std::string out;
  std::string pose;  // 16 comma-separated row-major values, overrides orbit
  double azimuth = 0.0;
  double elevation = 0.3;
  double distance = 4.0;
  double t = 0.0;
  int sweep = 0;
  int width = 256;
  int height = 256;
  double fov = 0.8;
  int samples = 48;
  double near = 2.0;
  double far = 6.0;
  std::string background = "white";
  bool static_decomp = false;
  int threads = 0;
};

std::array<double, 16> parse_pose_csv(const std::string& s) {
  std::array<double, 16> pose;
  std::stringstream ss(s);
  std::string item;
  size_t i = 0;
  while (std::getline(ss, item, ',')) {
    if (i >= 16) throw wvpl::ConfigError("--pose needs exactly 16 values");
    pose[i++] = std::stod(item);
  }
  if (i != 16) throw wvpl::ConfigError("--pose needs exactly 16 values");
  return pose;
}

int cmd_render(const RenderArgs& a) {
  auto m = load_model(a.model);
  if (a.static_decomp) m.field = wvpl::static_decomposition(m.field);
  const auto cache = wvpl::refresh_cache(m.field);
  fs::create_directories(a.out);

  std::array<double, 16> pose;
  if (!a.pose.empty()) {
    pose = parse_pose_csv(a.pose);
  } else {
    wvpl::SyntheticSceneSpec orbit;
    orbit.cam_distance = a.distance;
    orbit.cam_elevation = a.elevation;
    pose = wvpl::orbit_pose(orbit, a.azimuth);
  }
  const wvpl::Camera cam = wvpl::make_camera(pose, a.fov, a.width, a.height,
                                             wvpl::background_from_name(a.background));
  wvpl::validate_camera(cam);

  std::vector<double> times;
  if (a.sweep > 0) {
    for (int i = 0; i < a.sweep; ++i)
      times.push_back(a.sweep == 1 ? 0.0 : double(i) / (a.sweep - 1));
  } else {
    times.push_back(a.t);
  }

  wvpl::RenderOptions ropt;
  ropt.samples_per_ray = a.samples;
  ropt.near = a.near;
  ropt.far = a.far;
  ropt.workers = resolve_workers(a.threads);
  for (size_t i = 0; i < times.size(); ++i) {
    const auto img =
        wvpl::render_image(m.field.config, cache, m.decoder, cam, times[i], ropt);
    wvpl::write_png(frame_file(a.out, static_cast<int>(i)), wvpl::to_png_image(img));
  }
  std::cout << "wrote " << times.size() << " frame(s) to " << a.out << '\n';
  return 0;
}

struct EvalArgs {
  std::string model;
  std::string data;
  std::string out;
  std::string background = "white";
  int samples = 48;
  double near = 2.0;
  double far = 6.0;
  int dilation = 5;
  int threads = 0;
};

int cmd_eval(const EvalArgs& a) {
  const auto m = load_model(a.model);
  const auto cache = wvpl::refresh_cache(m.field);
  const wvpl::Dataset ds =
      wvpl::load_dnerf(a.data, wvpl::background_from_name(a.background));
  wvpl::EvalOptions opt;
  opt.samples_per_ray = a.samples;
  opt.near = a.near;
  opt.far = a.far;
  opt.workers = resolve_workers(a.threads);
  opt.dilation_radius = a.dilation;
  const auto rep = wvpl::evaluate(m.field.config, cache, m.decoder, ds, opt);
  const auto doc = wvpl::eval_report_json(rep);
  if (!a.out.empty()) {
    std::ofstream f(a.out);
    f << doc.dump(2) << '\n';
    if (!f) throw wvpl::ConfigError("cannot write report to " + a.out);
  }
  std::cout << "psnr " << rep.mean_whole << "  fg " << rep.mean_fg << "  bg "
            << rep.mean_bg << " over " << rep.frame_indices.size() << " frames\n";
  return 0;
}

struct CompressArgs {
  std::string model;
  std::string out;
  double tau = 0.1;
  std::string backend = "lzma";
};

int cmd_compress(const CompressArgs& a) {
  const auto m = load_model(a.model);
  const auto backend = wvpl::backend_from_name(a.backend);
  const auto bytes = wvpl::compress_model(m.field, m.decoder, a.tau, backend);
  wvpl::write_bytes(a.out, bytes);
  print_plane_table(wvpl::threshold_coeffs(m.field, a.tau));
  std::cout << "wrote " << bytes.size() << " bytes (" << a.backend << ", tau " << a.tau
            << ") to " << a.out << '\n';
  return 0;
}

int cmd_decompress(const std::string& in, const std::string& out) {
  const auto m = load_model(in);
  const auto bytes =
      wvpl::compress_model(m.field, m.decoder, 0.0, wvpl::CodecBackend::Raw);
  wvpl::write_bytes(out, bytes);
  std::cout << "wrote dense checkpoint (" << bytes.size() << " bytes) to " << out
            << '\n';
  return 0;
}

struct BenchArgs {
  std::string model;
  double tau = 0.1;
  std::string backends = "raw,gzip,bzip2,lzma";
};

int cmd_bench_codec(const BenchArgs& a) {
  const auto m = load_model(a.model);
  std::vector<wvpl::CodecBackend> backends;
  std::stringstream ss(a.backends);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) backends.push_back(wvpl::backend_from_name(item));
  const auto rows = wvpl::bench_codec(m.field, m.decoder, a.tau, backends);
  std::printf("%-8s %12s %10s\n", "backend", "bytes", "vs-raw");
  for (const auto& r : rows)
    std::printf("%-8s %12zu %9.2fx\n", wvpl::backend_name(r.backend), r.bytes,
                r.ratio_vs_raw);
  return 0;
}

int cmd_info(const std::string& path) {
  const auto bytes = wvpl::read_bytes(path);
  const auto m = wvpl::decompress_model(bytes);
  const auto& cfg = m.field.config;
  std::cout << "file:        " << path << " (" << bytes.size() << " bytes, "
            << wvpl::backend_name(m.backend) << " backend)\n";
  std::cout << "features:    B=" << cfg.feature_len << "  levels=" << cfg.levels
            << "  family=" << cfg.family << '\n';
  std::cout << "planes:      " << cfg.spatial_rows << 'x' << cfg.spatial_cols
            << "  time_res=" << cfg.time_res
            << (cfg.static_mode ? "  (static tri-plane)" : "") << '\n';
  std::cout << "scales:      [";
  for (size_t i = 0; i < cfg.scales.size(); ++i)
    std::cout << (i ? "," : "") << cfg.scales[i];
  std::cout << "]  fusion=" << wvpl::fusion_name(cfg.fusion) << '\n';
  std::cout << "k:           [";
  for (size_t i = 0; i < cfg.k.size(); ++i) std::cout << (i ? "," : "") << cfg.k[i];
  std::cout << "]\n";
  std::cout << "bbox:        [" << cfg.bbox_min[0] << "," << cfg.bbox_min[1] << ","
            << cfg.bbox_min[2] << "] .. [" << cfg.bbox_max[0] << "," << cfg.bbox_max[1]
            << "," << cfg.bbox_max[2] << "]  t=[" << cfg.t_min << "," << cfg.t_max
            << "]\n";
  std::cout << "decoder:     " << m.decoder.hidden_layers << " hidden layers, "
            << m.decoder.param_count() << " parameters\n";
  const auto [nz, total] = wvpl::count_nonzero(m.field);
  std::cout << "coefficients " << nz << " nonzero of " << total << '\n';
  print_plane_table(m.field);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"wavelet-plane dynamic radiance fields"};
  app.require_subcommand(1);

  TrainArgs train;
  auto* sub_train = app.add_subcommand("train", "train a model from a run config");
  sub_train->add_option("--config", train.config, "run config json")->required();
  sub_train->add_option("--seed", train.seed, "override train.seed");
  sub_train->add_option("--threads", train.threads,
                        "worker count (default: WAVEPLANE_THREADS or hardware)");

  RenderArgs render;
  auto* sub_render = app.add_subcommand("render", "render frames from a model");
  sub_render->add_option("--model", render.model, ".wvck/.wvpl file")->required();
  sub_render->add_option("--out", render.out, "output directory")->required();
  sub_render->add_option("--pose", render.pose, "camera-to-world, 16 csv values");
  sub_render->add_option("--azimuth", render.azimuth, "orbit azimuth (rad)");
  sub_render->add_option("--elevation", render.elevation, "orbit elevation (rad)");
  sub_render->add_option("--distance", render.distance, "orbit distance");
  auto* t_opt = sub_render->add_option("--t", render.t, "time in [0,1]");
  auto* sweep_opt =
      sub_render->add_option("--t-sweep", render.sweep, "render N frames, t=i/(N-1)");
  t_opt->excludes(sweep_opt);
  sub_render->add_option("--width", render.width, "image width");
  sub_render->add_option("--height", render.height, "image height");
  sub_render->add_option("--fov", render.fov, "horizontal fov (rad)");
  sub_render->add_option("--samples", render.samples, "samples per ray");
  sub_render->add_option("--near", render.near, "near plane");
  sub_render->add_option("--far", render.far, "far plane");
  sub_render->add_option("--background", render.background, "white|black");
  sub_render->add_flag("--static-decomposition", render.static_decomp,
                       "zero space-time coefficients before rendering");
  sub_render->add_option("--threads", render.threads, "worker count");

  EvalArgs eval;
  auto* sub_eval = app.add_subcommand("eval", "score a model on a dataset");
  sub_eval->add_option("--model", eval.model, ".wvck/.wvpl file")->required();
  sub_eval->add_option("--data", eval.data, "dataset directory")->required();
  sub_eval->add_option("--out", eval.out, "report json path");
  sub_eval->add_option("--background", eval.background, "white|black");
  sub_eval->add_option("--samples", eval.samples, "samples per ray");
  sub_eval->add_option("--near", eval.near, "near plane");
  sub_eval->add_option("--far", eval.far, "far plane");
  sub_eval->add_option("--dilation-radius", eval.dilation, "foreground mask dilation");
  sub_eval->add_option("--threads", eval.threads, "worker count");

  CompressArgs comp;
  auto* sub_comp = app.add_subcommand("compress", "threshold and compress a model");
  sub_comp->add_option("--model", comp.model, "input .wvck/.wvpl")->required();
  sub_comp->add_option("--out", comp.out, "output .wvpl")->required();
  sub_comp->add_option("--tau", comp.tau, "hard threshold")
      ->check(CLI::NonNegativeNumber);
  sub_comp->add_option("--backend", comp.backend, "raw|gzip|bzip2|lzma");

  std::string dec_in, dec_out;
  auto* sub_dec = app.add_subcommand("decompress", "expand a model to a raw checkpoint");
  sub_dec->add_option("--model", dec_in, "input .wvpl")->required();
  sub_dec->add_option("--out", dec_out, "output .wvck")->required();

  BenchArgs bench;
  auto* sub_bench = app.add_subcommand("bench-codec", "compare backend sizes");
  sub_bench->add_option("--model", bench.model, "input .wvck/.wvpl")->required();
  sub_bench->add_option("--tau", bench.tau, "hard threshold")
      ->check(CLI::NonNegativeNumber);
  sub_bench->add_option("--backends", bench.backends, "comma-separated list");

  std::string info_path;
  auto* sub_info = app.add_subcommand("info", "print the header of a model file");
  sub_info->add_option("file", info_path, ".wvck/.wvpl file")->required();

  try {
    app.parse(argc, argv);
    if (*sub_train) return cmd_train(train);
    if (*sub_render) return cmd_render(render);
    if (*sub_eval) return cmd_eval(eval);
    if (*sub_comp) return cmd_compress(comp);
    if (*sub_dec) return cmd_decompress(dec_in, dec_out);
    if (*sub_bench) return cmd_bench_codec(bench);
    if (*sub_info) return cmd_info(info_path);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;  // --help exits 0, any parse failure is usage
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
