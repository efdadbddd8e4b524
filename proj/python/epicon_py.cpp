/* Copyright 2026 The epicon Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "epicon/adapters.hpp"
#include "epicon/attention.hpp"
#include "epicon/constraint.hpp"
#include "epicon/epipolar.hpp"
#include "epicon/errors.hpp"
#include "epicon/geometry.hpp"
#include "epicon/objective.hpp"
#include "epicon/training.hpp"
#include "epicon/trajectory_io.hpp"

namespace py = pybind11;
using namespace epicon;

namespace {

using Square = py::array_t<double, py::array::c_style | py::array::forcecast>;

int square_side(const Square& a) {
  if (a.ndim() != 2 || a.shape(0) != a.shape(1)) {
    throw DimensionMismatch("expected a square L x L array");
  }
  return static_cast<int>(a.shape(0));
}

std::span<const double> view(const Square& a) {
  return {a.data(), static_cast<std::size_t>(a.size())};
}

Square to_square(const std::vector<double>& v, int l) {
  Square out({l, l});
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

py::bytes to_bytes(const std::vector<std::uint8_t>& b) {
  return {reinterpret_cast<const char*>(b.data()), b.size()};
}

std::vector<std::uint8_t> from_bytes(const py::bytes& b) {
  const std::string s = b;
  return {s.begin(), s.end()};
}

SuppressionMask omega_for(std::span<const double> attention, const EpipolarMaskVolume& mask,
                          const std::vector<int>& background, double percent,
                          const std::string& scope) {
  return suppression_mask(attention, mask, background, percent, parse_delta_scope(scope));
}

}  // namespace

PYBIND11_MODULE(_epicon, m) {
  m.doc() = "Epipolar attention masks, losses and adapters";

  auto error = py::register_exception<Error>(m, "Error");
  py::register_exception<DegenerateMotion>(m, "DegenerateMotion", error);
  py::register_exception<LineUndefined>(m, "LineUndefined", error);
  py::register_exception<NonFiniteInput>(m, "NonFiniteInput", error);
  py::register_exception<EmptyRow>(m, "EmptyRow", error);
  py::register_exception<DimensionMismatch>(m, "DimensionMismatch", error);
  py::register_exception<DegenerateSchedule>(m, "DegenerateSchedule", error);
  py::register_exception<ParseError>(m, "ParseError", error);
  py::register_exception<NonRotation>(m, "NonRotation", error);
  py::register_exception<FormatError>(m, "FormatError", error);
  py::register_exception<InvalidArgument>(m, "InvalidArgument", error);
  py::register_exception<IoError>(m, "IoError", error);

  py::class_<CameraIntrinsics>(m, "CameraIntrinsics")
      .def(py::init([](double fx, double fy, double cx, double cy) {
             return CameraIntrinsics{fx, fy, cx, cy};
           }),
           py::arg("fx"), py::arg("fy"), py::arg("cx"), py::arg("cy"))
      .def_readwrite("fx", &CameraIntrinsics::fx)
      .def_readwrite("fy", &CameraIntrinsics::fy)
      .def_readwrite("cx", &CameraIntrinsics::cx)
      .def_readwrite("cy", &CameraIntrinsics::cy);

  py::class_<CameraPose>(m, "CameraPose")
      .def(py::init([](const CameraIntrinsics& k, const Mat3& r, const Vec3& t, int frame) {
             CameraPose p;
             p.intrinsics = k;
             p.extrinsics.rotation = r;
             p.extrinsics.translation = t;
             p.frame_index = frame;
             return p;
           }),
           py::arg("intrinsics"), py::arg("rotation"), py::arg("translation"),
           py::arg("frame_index") = 0)
      .def_readwrite("intrinsics", &CameraPose::intrinsics)
      .def_property(
          "rotation", [](const CameraPose& p) { return p.extrinsics.rotation; },
          [](CameraPose& p, const Mat3& r) { p.extrinsics.rotation = r; })
      .def_property(
          "translation", [](const CameraPose& p) { return p.extrinsics.translation; },
          [](CameraPose& p, const Vec3& t) { p.extrinsics.translation = t; })
      .def_readwrite("frame_index", &CameraPose::frame_index)
      .def("project", &CameraPose::project, py::arg("world"));

  m.def(
      "fundamental_matrix",
      [](const CameraPose& i, const CameraPose& j) { return fundamental_matrix(i, j).matrix(); },
      py::arg("pose_i"), py::arg("pose_j"),
      "Unit-Frobenius F mapping pixels of pose_i to lines in pose_j.");

  m.def(
      "epipolar_line",
      [](const Mat3& f, double u, double v) {
        const EpipolarLine l = epipolar_line(FundamentalMatrix::from_matrix(f), {u, v});
        return py::make_tuple(l.a, l.b, l.c);
      },
      py::arg("f"), py::arg("u"), py::arg("v"));

  py::class_<LatentDims>(m, "LatentDims")
      .def(py::init([](int f, int h, int w) { return LatentDims{f, h, w}; }), py::arg("frames"),
           py::arg("height"), py::arg("width"))
      .def_readonly("frames", &LatentDims::frames)
      .def_readonly("height", &LatentDims::height)
      .def_readonly("width", &LatentDims::width)
      .def_property_readonly("tokens", &LatentDims::tokens)
      .def("token", py::overload_cast<int, int, int>(&LatentDims::token, py::const_),
           py::arg("f"), py::arg("v"), py::arg("u"))
      .def("__repr__", &LatentDims::to_string);

  py::class_<EpipolarMaskVolume>(m, "MaskVolume")
      .def_property_readonly("dims", &EpipolarMaskVolume::dims)
      .def_property_readonly("threshold", &EpipolarMaskVolume::threshold)
      .def("get", &EpipolarMaskVolume::get, py::arg("query"), py::arg("key"))
      .def("pair_fill_fraction", &EpipolarMaskVolume::pair_fill_fraction, py::arg("query_frame"),
           py::arg("key_frame"))
      .def("to_array",
           [](const EpipolarMaskVolume& v) {
             const int l = v.dims().tokens();
             py::array_t<bool> out({l, l});
             auto a = out.mutable_unchecked<2>();
             for (int q = 0; q < l; ++q) {
               for (int k = 0; k < l; ++k) a(q, k) = v.get(q, k);
             }
             return out;
           })
      .def("encode", [](const EpipolarMaskVolume& v) { return to_bytes(encode_mask_volume(v)); })
      .def_static("decode",
                  [](const py::bytes& b) { return decode_mask_volume(from_bytes(b)); })
      .def(py::self == py::self);

  m.def(
      "mask_volume",
      [](const std::vector<CameraPose>& poses, int height, int width, double threshold) {
        return mask_volume(poses, GridSize{height, width}, threshold);
      },
      py::arg("poses"), py::arg("height"), py::arg("width"),
      py::arg("threshold") = kDefaultBandThreshold);

  m.def(
      "softmax_rows",
      [](const Square& logits) {
        const int l = square_side(logits);
        const AttentionMap a = AttentionMap::from_logits(
            1, l, std::vector<double>(logits.data(), logits.data() + logits.size()));
        return to_square(a.values(), l);
      },
      py::arg("logits"));

  m.def(
      "percentile_threshold",
      [](const std::vector<double>& row, double percent) {
        return percentile_threshold(row, percent);
      },
      py::arg("row"), py::arg("percent"));

  m.def(
      "suppression_mask",
      [](const Square& attention, const EpipolarMaskVolume& mask,
         const std::vector<int>& background, double percent, const std::string& scope) {
        const int l = square_side(attention);
        const SuppressionMask omega = omega_for(view(attention), mask, background, percent, scope);
        py::array_t<bool> out({l, l});
        auto a = out.mutable_unchecked<2>();
        for (int q = 0; q < l; ++q) {
          for (int k = 0; k < l; ++k) a(q, k) = omega.at(q, k);
        }
        return out;
      },
      py::arg("attention"), py::arg("mask"), py::arg("background"),
      py::arg("percent") = kDefaultPercentile, py::arg("scope") = "row");

  m.def(
      "epipolar_loss",
      [](const Square& attention, const EpipolarMaskVolume& mask,
         const std::vector<int>& background, double percent, const std::string& scope) {
        square_side(attention);
        const SuppressionMask omega = omega_for(view(attention), mask, background, percent, scope);
        return epipolar_loss(view(attention), omega).loss;
      },
      py::arg("attention"), py::arg("mask"), py::arg("background"),
      py::arg("percent") = kDefaultPercentile, py::arg("scope") = "row");

  m.def(
      "epipolar_loss_grad",
      [](const Square& logits, const EpipolarMaskVolume& mask, const std::vector<int>& background,
         double percent, const std::string& scope) {
        const int l = square_side(logits);
        const AttentionMap a = AttentionMap::from_logits(
            1, l, std::vector<double>(logits.data(), logits.data() + logits.size()));
        const SuppressionMask omega = omega_for(a.values(), mask, background, percent, scope);
        return to_square(epipolar_loss_grad(view(logits), omega), l);
      },
      py::arg("logits"), py::arg("mask"), py::arg("background"),
      py::arg("percent") = kDefaultPercentile, py::arg("scope") = "row",
      "Gradient w.r.t. logits with omega frozen at softmax(logits).");

  m.def(
      "gradient_check",
      [](std::uint64_t seed, int instances) {
        GradCheckOptions o;
        o.seed = seed;
        o.instances = instances;
        const GradCheckResult r = run_gradient_check(o);
        return py::make_tuple(r.passed, r.max_relative_error);
      },
      py::arg("seed") = 0, py::arg("instances") = 20);

  py::class_<LoraAdapter>(m, "LoraAdapter")
      .def_static(
          "init",
          [](int channels, int rank, std::uint64_t seed, std::optional<double> alpha) {
            std::mt19937_64 rng(seed);
            return LoraAdapter::init(channels, rank, rng, alpha);
          },
          py::arg("channels"), py::arg("rank"), py::arg("seed") = 0,
          py::arg("alpha") = std::nullopt)
      .def_readwrite("down", &LoraAdapter::down)
      .def_readwrite("up", &LoraAdapter::up)
      .def_readwrite("alpha", &LoraAdapter::alpha)
      .def_property_readonly("rank", &LoraAdapter::rank)
      .def_property_readonly("channels", &LoraAdapter::channels)
      .def("delta_weight", &LoraAdapter::delta_weight)
      .def("encode", [](const LoraAdapter& a) { return to_bytes(encode_adapter(a)); })
      .def_static("decode", [](const py::bytes& b) { return decode_adapter(from_bytes(b)); });

  m.def(
      "total_loss",
      [](double latent, double vgg, double epipolar, double lambda_vgg, double lambda_epipolar) {
        return total_loss(latent, vgg, epipolar, LossWeights{lambda_vgg, lambda_epipolar});
      },
      py::arg("latent"), py::arg("vgg"), py::arg("epipolar"),
      py::arg("lambda_vgg") = LossWeights{}.vgg, py::arg("lambda_epipolar") = LossWeights{}.epipolar);
  m.def("vgg_gate", &vgg_gate, py::arg("timestep"), py::arg("schedule_len"));

  py::class_<Trajectory>(m, "Trajectory")
      .def(py::init<>())
      .def_readwrite("image_width", &Trajectory::image_width)
      .def_readwrite("image_height", &Trajectory::image_height)
      .def_readwrite("poses", &Trajectory::poses);
  m.def(
      "parse_trajectory", [](const std::string& text) { return parse_trajectory(text); },
      py::arg("text"));
  m.def("serialize_trajectory", &serialize_trajectory, py::arg("trajectory"));
}
