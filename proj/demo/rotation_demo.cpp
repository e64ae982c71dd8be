// Recovers a planted angular velocity from a synthetic event packet, once
// with the naive gradient of the rectangular kernel and once with FBP.

#include <cmath>
#include <cstdio>

#include "fbp/fbp.hpp"

using namespace fbp;

int main() {
  SyntheticScene scene;
  scene.noise_std = 0.5;
  const auto synth = synth_events(scene);
  const EventPacket packet(normalize_events(synth.events, scene.map), RefTimePolicy::Mean);
  std::printf("%zu events, planted omega = (%.3f, %.3f, %.3f) rad/s\n", packet.size(),
              scene.motion[0], scene.motion[1], scene.motion[2]);

  for (const auto& mode : {GradMode::naive(), GradMode::fbp(), GradMode::ste(), GradMode::sigmoid()}) {
    ObjectiveConfig cfg;
    cfg.mode = mode;
    const auto result = lbfgs_maximize(cfg, packet, {0.0, 0.0, 0.0});
    const auto& w = result.theta;
    double err = 0.0;
    for (int k = 0; k < 3; ++k) err += (w[k] - scene.motion[k]) * (w[k] - scene.motion[k]);
    std::printf("%-11s omega = (%7.4f, %7.4f, %7.4f)  |error| = %.4f  iterations = %zu  (%s)\n",
                mode.name().c_str(), w[0], w[1], w[2], std::sqrt(err),
                result.trace.iterates.size() - 1, std::string(to_string(result.trace.reason)).c_str());
  }
  return 0;
}
