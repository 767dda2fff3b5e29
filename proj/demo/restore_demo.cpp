// Speckle the Cameraman image with 3-look noise, restore it for a few
// lambda values and print the relative error of each estimate.

#include <cstdio>

#include "speckle/speckle.hpp"

int main(int argc, char** argv) {
  const char* path = argc > 1 ? argv[1] : SPECKLE_DATA_DIR "/cameraman256.pgm";
  const speckle::ImageGrid x = speckle::load_image(path);
  const speckle::SpeckleModel model(3.0);

  const auto noise = speckle::sample_speckle(model, x.width(), x.height(), /*seed=*/7);
  const auto y = speckle::apply_speckle(x, noise);
  const auto obs = speckle::to_log(y);
  std::printf("noisy        err=%.4f\n", speckle::relative_error(y, x));

  for (double lambda : {0.5, 1.0, 2.0, 4.0}) {
    speckle::SolverConfig cfg;
    cfg.lambda = lambda;
    const auto res = speckle::restore(obs, model, cfg);
    std::printf("lambda=%-5.2f err=%.4f iterations=%d\n", lambda,
                speckle::relative_error(res.x_hat, x), res.iterations);
  }
  return 0;
}
