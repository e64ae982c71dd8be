// Command-line front end: bin, grad, bias, estimate, precision, synth.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fbp/fbp.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace fbp;

namespace {

struct ArgumentError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class GradChoice { Naive, FBP, STE, Sigmoid };

struct RunConfig {
  BinningKernelKind kernel = BinningKernelKind::Rect;
  ReconKernelKind recon = ReconKernelKind::Linear;
  GradChoice grad = GradChoice::FBP;
  bool grad_given = false;
  double slope = 10.0;
  ScoreKind::Kind score = ScoreKind::Kind::Variance;
  MotionModel model = MotionModel::Rotational;
  int ne = 20000;
  int width = 200;
  int height = 150;
  double delta = 0.01;
  double scale = 1.0 / 200.0;
  double offset_x = 120.0;
  double offset_y = 90.0;
  double r = 0.3;
  double p = 0.8;
  bool swap_p = false;
  double fd_step = 1.0;
  double grid_lo = -5.0;
  double grid_hi = 5.0;
  int grid_n = 11;
  std::uint64_t seed = 7;
  std::vector<double> theta{0.0, 0.0, 0.0};
  unsigned threads = 0;
  int packet = 0;
  int n_max = 3;
  // synth
  int points = 200;
  int events_per_point = 100;
  int packets = 5;
  double duration = 0.05;
  double noise = 0.5;
  std::vector<double> motion{1.0, -0.8, 1.2};
  std::string in, truth, out, json;
  std::string kernel_name = "rect", recon_name = "linear", grad_name = "fbp", score_name = "var", model_name = "rot";

  void resolve() {
    const std::map<std::string, BinningKernelKind> kernels{
        {"rect", BinningKernelKind::Rect}, {"linear", BinningKernelKind::Linear}, {"gauss", BinningKernelKind::GaussTrunc}};
    const std::map<std::string, ReconKernelKind> recons{
        {"linear", ReconKernelKind::Linear}, {"cubic", ReconKernelKind::Cubic}, {"lanczos", ReconKernelKind::Lanczos}};
    const std::map<std::string, GradChoice> grads{
        {"naive", GradChoice::Naive}, {"fbp", GradChoice::FBP}, {"ste", GradChoice::STE}, {"sigmoid", GradChoice::Sigmoid}};
    kernel = kernels.at(kernel_name);
    recon = recons.at(recon_name);
    grad = grads.at(grad_name);
    score = score_name == "var" ? ScoreKind::Kind::Variance : ScoreKind::Kind::LogLikelihood;
    model = model_name == "rot" ? MotionModel::Rotational : MotionModel::Translational;
  }

  GradMode mode() const {
    switch (grad) {
      case GradChoice::Naive: return GradMode::naive();
      case GradChoice::FBP: return GradMode::fbp(recon);
      case GradChoice::STE: return GradMode::ste();
      case GradChoice::Sigmoid: return GradMode::sigmoid(slope);
    }
    return GradMode::fbp(recon);
  }

  FrameGrid grid() const { return FrameGrid::centered(width, height, delta); }
  CoordinateMap map() const { return {scale, offset_x, offset_y}; }
  NBParams nb() const { return {r, p, swap_p}; }

  ObjectiveConfig objective() const {
    ObjectiveConfig c;
    c.kernel = kernel;
    c.mode = mode();
    c.score = score == ScoreKind::Kind::Variance ? ScoreKind::variance() : ScoreKind::loglik(nb());
    c.grid = grid();
    c.model = model;
    return c;
  }

  Vec3 theta3() const { return {theta[0], theta[1], theta[2]}; }

  void validate() const {
    const auto need = [](bool ok, const std::string& msg) {
      if (!ok) throw ArgumentError(msg);
    };
    need(ne >= 1, "--ne must be at least 1");
    need(width >= 1 && height >= 1, "--width and --height must be positive");
    need(delta > 0.0 && std::isfinite(delta), "--delta must be positive");
    need(scale > 0.0 && std::isfinite(scale), "--scale must be positive");
    need(r > 0.0, "--r must be positive");
    need(p > 0.0 && p < 1.0, "--p must lie in (0, 1)");
    need(fd_step > 0.0, "--fd-step must be positive");
    need(grid_n >= 2, "--grid-n must be at least 2");
    need(grid_hi > grid_lo, "--grid-hi must exceed --grid-lo");
    need(slope > 0.0, "--slope must be positive");
    need(theta.size() == 3, "--theta takes three values");
    need(motion.size() == 3, "--motion takes three values");
    need(packet >= 0, "--packet must be nonnegative");
    need(n_max >= 1, "--n-max must be at least 1");
    need(points >= 1 && events_per_point >= 1 && packets >= 1, "synthetic scene sizes must be positive");
    need(duration > 0.0, "--duration must be positive");
    need(noise >= 0.0, "--noise must be nonnegative");
  }
};

ordered_json config_json(const RunConfig& c) {
  ordered_json j;
  j["kernel"] = std::string(to_string(c.kernel));
  j["recon"] = std::string(to_string(c.recon));
  j["grad"] = c.grad_name;
  j["score"] = c.score == ScoreKind::Kind::Variance ? "var" : "ll";
  j["model"] = std::string(to_string(c.model));
  j["ne"] = c.ne;
  j["width"] = c.width;
  j["height"] = c.height;
  j["delta"] = c.delta;
  j["scale"] = c.scale;
  j["offset_x"] = c.offset_x;
  j["offset_y"] = c.offset_y;
  j["r"] = c.r;
  j["p"] = c.p;
  j["fd_step"] = c.fd_step;
  j["seed"] = c.seed;
  if (!c.in.empty()) j["in"] = c.in;
  return j;
}

void emit_json(const RunConfig& c, const ordered_json& j) {
  const std::string text = j.dump(2) + "\n";
  std::cout << text;
  if (!c.json.empty()) {
    std::ofstream f(c.json);
    if (!f) throw Error(ErrorCode::IoError, "cannot write " + c.json);
    f << text;
  }
}

// Output stream: --out when given, stdout otherwise.
class Sink {
 public:
  explicit Sink(const std::string& path) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) throw Error(ErrorCode::IoError, "cannot write " + path);
    }
  }
  std::ostream& get() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }

 private:
  std::ofstream file_;
};

std::vector<Event> load_events(const RunConfig& c) {
  std::vector<std::size_t> back;
  auto evs = read_events_txt(c.in, &back);
  if (!back.empty()) {
    ordered_json w;
    w["warning"] = {{"code", "NonMonotonicTimestamp"}, {"count", back.size()}, {"first_line", back.front()}};
    std::cerr << w.dump() << "\n";
  }
  return normalize_events(std::move(evs), c.map());
}

std::vector<EventPacket> load_packets(const RunConfig& c) {
  auto packets = packetize(load_events(c), static_cast<std::size_t>(c.ne));
  if (packets.empty())
    throw Error(ErrorCode::InvalidArgument, "input holds fewer than --ne events; no packet formed");
  return packets;
}

// Packet for grad/bias: the input file when given, else a synthetic packet.
EventPacket analysis_packet(const RunConfig& c) {
  if (!c.in.empty()) {
    const auto packets = load_packets(c);
    if (static_cast<std::size_t>(c.packet) >= packets.size())
      throw Error(ErrorCode::InvalidArgument, "--packet out of range");
    return packets[c.packet];
  }
  SyntheticScene sc;
  sc.seed = c.seed;
  sc.model = c.model;
  sc.motion = {c.motion[0], c.motion[1], c.motion[2]};
  sc.n_points = 200;
  sc.events_per_point = 50;
  sc.duration = 0.03;
  sc.noise_std = c.noise;
  sc.map = c.map();
  const auto se = synth_events(sc);
  return EventPacket(normalize_events(se.events, sc.map), RefTimePolicy::Mean);
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

int cmd_bin(const RunConfig& c) {
  if (c.in.empty()) throw ArgumentError("bin needs --in");
  const auto packets = load_packets(c);
  if (static_cast<std::size_t>(c.packet) >= packets.size())
    throw Error(ErrorCode::InvalidArgument, "--packet out of range");
  const auto cfg = c.objective();
  const ContrastObjective obj(cfg);
  const auto frame = obj.frame(packets[c.packet], c.theta3());
  Sink sink(c.out);
  write_frame_csv(sink.get(), frame);
  if (!c.out.empty()) {
    ordered_json j;
    j["config"] = config_json(c);
    j["packet"] = c.packet;
    j["frame_sum"] = frame.sum();
    j["score"] = score(cfg.score, frame);
    emit_json(c, j);
  }
  return 0;
}

int cmd_grad(const RunConfig& c) {
  const auto packet = analysis_packet(c);
  const Vec3 theta = c.theta3();
  auto cfg = c.objective();
  const auto fd = fd_gradient(cfg, packet, theta, c.fd_step);
  Sink sink(c.out);
  auto& os = sink.get();
  os << "mode,axis,g_analytic,g_fd,bias\n";
  for (const auto& mode : {GradMode::naive(), GradMode::fbp(c.recon), GradMode::ste(), GradMode::sigmoid(c.slope)}) {
    cfg.mode = mode;
    const auto g = objective_grad(cfg, packet, theta);
    for (int k = 0; k < 3; ++k)
      os << mode.name() << ',' << k + 1 << ',' << fmt(g[k]) << ',' << fmt(fd[k]) << ',' << fmt(g[k] - fd[k]) << '\n';
  }
  return 0;
}

int cmd_bias(const RunConfig& c) {
  const auto packet = analysis_packet(c);
  std::vector<GradMode> modes;
  if (c.grad_given) modes = {c.mode()};
  else modes = {GradMode::fbp(c.recon), GradMode::sigmoid(c.slope), GradMode::ste()};
  BiasGridSpec spec;
  spec.lo = {c.grid_lo, c.grid_lo, c.grid_lo};
  spec.hi = {c.grid_hi, c.grid_hi, c.grid_hi};
  spec.n = c.grid_n;
  spec.fd_step = c.fd_step;
  spec.threads = c.threads;
  const auto report = bias_grid(c.objective(), packet, modes, spec);
  {
    Sink sink(c.out);
    write_bias_csv(sink.get(), report);
  }
  if (c.out.empty()) return 0;
  ordered_json j;
  j["config"] = config_json(c);
  j["grid"] = {{"lo", c.grid_lo}, {"hi", c.grid_hi}, {"n", c.grid_n}};
  j["evaluations"] = report.evaluations();
  j["components"] = report.components();
  j["max_abs_fd"] = report.max_abs_fd();
  ordered_json rows = ordered_json::array();
  for (const auto& r : rank_modes(report)) {
    ordered_json row;
    row["mode"] = r.mode.name();
    row["mean_abs_bias"] = r.mean_abs_bias;
    row["sign_agreement"] = r.sign_agreement;
    row["rank"] = r.rank ? ordered_json(*r.rank) : ordered_json(nullptr);
    rows.push_back(row);
  }
  j["modes"] = rows;
  emit_json(c, j);
  return 0;
}

fs::path default_truth_path(const fs::path& events) {
  auto p = events;
  p.replace_extension();
  p += ".truth.txt";
  return p;
}

int cmd_estimate(const RunConfig& c) {
  if (c.in.empty()) throw ArgumentError("estimate needs --in");
  const auto packets = load_packets(c);
  std::optional<std::vector<Vec3>> truth;
  std::string truth_path = c.truth;
  if (truth_path.empty() && fs::exists(default_truth_path(c.in))) truth_path = default_truth_path(c.in).string();
  if (!truth_path.empty()) {
    truth = read_truth_txt(truth_path);
    if (truth->size() < packets.size())
      throw Error(ErrorCode::LengthMismatch, "truth file has fewer lines than packets");
    truth->resize(packets.size());
  }

  const ContrastObjective obj(c.objective());
  std::vector<OptResult<3>> results(packets.size());
  detail::parallel_for(packets.size(), c.threads, [&](std::size_t i) {
    results[i] = lbfgs_maximize(obj, packets[i], {0.0, 0.0, 0.0});
  });

  std::vector<Vec3> estimates;
  for (const auto& r : results) estimates.push_back(r.theta);

  ordered_json per = ordered_json::array();
  std::ostringstream os;
  os << "packet,t_ref,theta1,theta2,theta3,iterations,evaluations,value,stop_reason"
     << (truth ? ",error_norm" : "") << '\n';
  for (std::size_t i = 0; i < packets.size(); ++i) {
    const auto& r = results[i];
    ordered_json row;
    row["index"] = i;
    row["t_ref"] = packets[i].t_ref;
    row["theta"] = {r.theta[0], r.theta[1], r.theta[2]};
    row["iterations"] = r.trace.iterates.size() - 1;
    row["evaluations"] = r.trace.evaluations;
    row["value"] = r.trace.iterates.back().value;
    row["stop_reason"] = std::string(to_string(r.trace.reason));
    os << i << ',' << fmt(packets[i].t_ref) << ',' << fmt(r.theta[0]) << ',' << fmt(r.theta[1]) << ','
       << fmt(r.theta[2]) << ',' << r.trace.iterates.size() - 1 << ',' << r.trace.evaluations << ','
       << fmt(r.trace.iterates.back().value) << ',' << to_string(r.trace.reason);
    if (truth) {
      double e = 0.0;
      for (int k = 0; k < 3; ++k) e += std::pow(r.theta[k] - (*truth)[i][k], 2);
      row["truth"] = {(*truth)[i][0], (*truth)[i][1], (*truth)[i][2]};
      row["error_norm"] = std::sqrt(e);
      os << ',' << fmt(std::sqrt(e));
    }
    os << '\n';
    per.push_back(row);
  }

  ordered_json j;
  j["config"] = config_json(c);
  j["n_packets"] = packets.size();
  if (truth) {
    const double rms = rms_error(estimates, *truth);
    double mean_norm = 0.0;
    for (const auto& t : *truth) mean_norm += std::sqrt(t[0] * t[0] + t[1] * t[1] + t[2] * t[2]);
    mean_norm /= static_cast<double>(truth->size());
    j["rms"] = rms;
    if (c.model == MotionModel::Rotational) j["rms_deg"] = rms_error(estimates, *truth, true);
    j["rms_relative"] = mean_norm > 0.0 ? rms / mean_norm : 0.0;
    j["truth_file"] = truth_path;
  } else {
    j["rms"] = nullptr;
  }
  j["per_packet"] = per;
  if (!c.out.empty()) {
    Sink sink(c.out);
    sink.get() << os.str();
  }
  emit_json(c, j);
  return 0;
}

int cmd_precision(const RunConfig& c) {
  const auto rows = degree_of_precision(c.kernel, c.recon, c.n_max);
  Sink sink(c.out);
  auto& os = sink.get();
  os << "n,lhs,rhs,residual\n";
  for (const auto& r : rows) os << r.n << ',' << fmt(r.lhs) << ',' << fmt(r.rhs) << ',' << fmt(r.residual) << '\n';
  return 0;
}

int cmd_synth(const RunConfig& c) {
  if (c.out.empty()) throw ArgumentError("synth needs --out");
  SyntheticScene sc;
  sc.seed = c.seed;
  sc.model = c.model;
  sc.motion = {c.motion[0], c.motion[1], c.motion[2]};
  sc.n_points = c.points;
  sc.events_per_point = c.events_per_point;
  sc.n_packets = c.packets;
  sc.duration = c.duration;
  sc.noise_std = c.noise;
  sc.map = c.map();
  const auto se = synth_events(sc);
  const fs::path truth_path = c.truth.empty() ? default_truth_path(c.out) : fs::path(c.truth);
  write_events_txt(c.out, se.events);
  write_truth_txt(truth_path, se.truth);
  ordered_json j;
  j["events_file"] = c.out;
  j["truth_file"] = truth_path.string();
  j["n_events"] = se.events.size();
  j["events_per_packet"] = sc.events_per_packet();
  j["n_packets"] = sc.n_packets;
  j["model"] = std::string(to_string(sc.model));
  j["motion"] = c.motion;
  j["seed"] = c.seed;
  emit_json(c, j);
  return 0;
}

void print_error(const char* kind, const std::string& code, const std::string& message) {
  ordered_json e;
  e["error"] = {{"kind", kind}, {"code", code}, {"message", message}};
  std::cerr << e.dump() << "\n";
}

void add_common(CLI::App* sub, RunConfig& c) {
  sub->add_option("--kernel", c.kernel_name, "binning kernel")->check(CLI::IsMember({"rect", "linear", "gauss"}));
  sub->add_option("--recon", c.recon_name, "reconstruction kernel for fbp")
      ->check(CLI::IsMember({"linear", "cubic", "lanczos"}));
  sub->add_option("--grad", c.grad_name, "gradient mode")->check(CLI::IsMember({"naive", "fbp", "ste", "sigmoid"}));
  sub->add_option("--slope", c.slope, "sigmoid surrogate slope");
  sub->add_option("--score", c.score_name, "contrast score")->check(CLI::IsMember({"var", "ll"}));
  sub->add_option("--model", c.model_name, "motion model")->check(CLI::IsMember({"rot", "trans"}));
  sub->add_option("--ne", c.ne, "events per packet");
  sub->add_option("--width", c.width, "frame width in bins");
  sub->add_option("--height", c.height, "frame height in bins");
  sub->add_option("--delta", c.delta, "bin spacing in normalized units");
  sub->add_option("--scale", c.scale, "sensor to normalized scale");
  sub->add_option("--offset-x", c.offset_x, "sensor x mapped to 0");
  sub->add_option("--offset-y", c.offset_y, "sensor y mapped to 0");
  sub->add_option("--r", c.r, "negative binomial r");
  sub->add_option("--p", c.p, "negative binomial p");
  sub->add_flag("--swap-p", c.swap_p, "use the (p, 1-p) convention swapped");
  sub->add_option("--fd-step", c.fd_step, "central difference step");
  sub->add_option("--grid-lo", c.grid_lo, "bias grid lower bound");
  sub->add_option("--grid-hi", c.grid_hi, "bias grid upper bound");
  sub->add_option("--grid-n", c.grid_n, "bias grid samples per axis");
  sub->add_option("--seed", c.seed, "random seed");
  sub->add_option("--theta", c.theta, "motion parameters a,b,c")->delimiter(',')->expected(3);
  sub->add_option("--threads", c.threads, "worker threads (0 = all cores)");
  sub->add_option("--packet", c.packet, "packet index for bin/grad/bias");
  sub->add_option("--in", c.in, "input events.txt");
  sub->add_option("--truth", c.truth, "truth file");
  sub->add_option("--out", c.out, "output file");
  sub->add_option("--json", c.json, "also write the JSON summary here");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Functional backpropagation for event binning"};
  app.require_subcommand(1);
  RunConfig cfg;

  auto* bin = app.add_subcommand("bin", "bin warped events into a frame (CSV)");
  auto* grad = app.add_subcommand("grad", "analytic vs finite-difference gradient per mode");
  auto* bias = app.add_subcommand("bias", "gradient bias over a parameter grid");
  auto* estimate = app.add_subcommand("estimate", "per-packet motion estimation");
  auto* precision = app.add_subcommand("precision", "degree-of-precision table");
  auto* synth = app.add_subcommand("synth", "write a synthetic events.txt and truth file");
  for (auto* sub : {bin, grad, bias, estimate, precision, synth}) add_common(sub, cfg);
  precision->add_option("--n-max", cfg.n_max, "highest moment");
  synth->add_option("--points", cfg.points, "scene features");
  synth->add_option("--events-per-point", cfg.events_per_point, "events per feature per packet");
  synth->add_option("--packets", cfg.packets, "number of packets");
  synth->add_option("--duration", cfg.duration, "packet duration in seconds");
  for (auto* sub : {grad, bias, synth}) {
    sub->add_option("--noise", cfg.noise, "coordinate jitter in sensor units");
    sub->add_option("--motion", cfg.motion, "planted motion a,b,c")->delimiter(',')->expected(3);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    print_error("argument", e.get_name(), e.what());
    return 2;
  }

  try {
    for (auto* sub : app.get_subcommands())
      if (sub->get_option("--grad")->count() > 0) cfg.grad_given = true;
    cfg.resolve();
    cfg.validate();
    if (bin->parsed()) return cmd_bin(cfg);
    if (grad->parsed()) return cmd_grad(cfg);
    if (bias->parsed()) return cmd_bias(cfg);
    if (estimate->parsed()) return cmd_estimate(cfg);
    if (precision->parsed()) return cmd_precision(cfg);
    if (synth->parsed()) return cmd_synth(cfg);
  } catch (const ArgumentError& e) {
    print_error("argument", "InvalidArgument", e.what());
    return 2;
  } catch (const Error& e) {
    print_error("runtime", std::string(to_string(e.code())), e.what());
    return 1;
  } catch (const std::exception& e) {
    print_error("runtime", "Internal", e.what());
    return 1;
  }
  return 0;
}
