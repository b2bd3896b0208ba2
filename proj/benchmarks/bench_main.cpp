#include <benchmark/benchmark.h>

#include "snerf/confidence.hpp"
#include "snerf/dataset.hpp"
#include "snerf/field.hpp"
#include "snerf/pipeline.hpp"
#include "snerf/render.hpp"
#include "snerf/scenegen.hpp"

namespace {

using namespace snerf;

FieldConfig small_field() {
  FieldConfig f;
  f.density_layers = 2;
  f.density_width = 64;
  f.color_layers = 1;
  f.color_width = 32;
  f.seed = 7;
  return f;
}

const Capture& toy_capture() {
  static const Capture cap = capture_from_scene(street_toy(1));
  return cap;
}

void BM_FieldForward(benchmark::State& state) {
  const RadianceField field(small_field());
  const Eigen::Index n = state.range(0);
  Eigen::Matrix3Xd x = Eigen::Matrix3Xd::Random(3, n);
  Eigen::Matrix3Xd d = Eigen::Matrix3Xd::Random(3, n).colwise().normalized();
  FieldBatch batch;
  for (auto _ : state) {
    field.forward(x, d, batch);
    benchmark::DoNotOptimize(batch.sigma.data());
  }
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_FieldForward)->Arg(256)->Arg(4096);

void BM_RenderImage(benchmark::State& state) {
  const RadianceField field(small_field());
  const View& v = toy_capture().views[0];
  RenderConfig rc;
  rc.n_samples = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(render_image(field, v.intr, v.pose, rc));
  state.SetItemsProcessed(state.iterations() * v.intr.width * v.intr.height);
}
BENCHMARK(BM_RenderImage)->Arg(32)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_BatchBackward(benchmark::State& state) {
  const RadianceField field(small_field());
  const View& v = toy_capture().views[0];
  RenderConfig rc;
  rc.n_samples = 64;
  std::vector<RayQuery> rays;
  for (int i = 0; i < 256; ++i) {
    const Ray r = generate_ray(i % v.intr.width, (i * 7) % v.intr.height, v.intr, v.pose, rc.near, rc.far);
    rays.push_back({r, bin_samples(r, rc.n_samples, SpacingMode::kLog)});
  }
  BatchRenderer br(field, rc);
  br.forward(rays);
  const std::vector<Vec3> dc(rays.size(), Vec3::Constant(0.1));
  const std::vector<double> dd(rays.size(), 0.01);
  std::vector<double> grad(field.parameter_count());
  for (auto _ : state) {
    br.backward(dc, dd, grad);
    benchmark::DoNotOptimize(grad.data());
  }
}
BENCHMARK(BM_BatchBackward)->Unit(benchmark::kMillisecond);

void BM_FuseView(benchmark::State& state) {
  const Capture& cap = toy_capture();
  const std::vector<int> frames{0, 2, 4};
  FusionConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(fuse_view(cap, cap.index(2, 1), frames, cfg));
}
BENCHMARK(BM_FuseView)->Unit(benchmark::kMillisecond);

void BM_SsimMap(benchmark::State& state) {
  const View& v = toy_capture().views[0];
  const WarpedImage w = all_valid(toy_capture().views[1].rgb);
  for (auto _ : state) benchmark::DoNotOptimize(ssim_map(v.rgb, w));
}
BENCHMARK(BM_SsimMap);

}  // namespace
BENCHMARK_MAIN();
