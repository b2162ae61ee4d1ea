// Copyright 2026 The ctcocr Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "ctcocr/checkpoint.hpp"
#include "ctcocr/ctc.hpp"
#include "ctcocr/data.hpp"
#include "ctcocr/error.hpp"
#include "ctcocr/eval.hpp"
#include "ctcocr/image.hpp"

namespace py = pybind11;
using namespace ctcocr;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Tensor to_tensor(const Array& a) {
  if (a.ndim() != 2) throw ShapeError("expected a 2-D array");
  Tensor t({static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1))});
  std::copy(a.data(), a.data() + a.size(), t.raw());
  return t;
}

Array to_array(const Tensor& t) {
  std::vector<py::ssize_t> shape(t.shape().begin(), t.shape().end());
  Array out(shape);
  std::copy(t.raw(), t.raw() + t.size(), out.mutable_data());
  return out;
}

std::vector<PredictionPair> pairs_of(const std::vector<std::string>& predictions,
                                     const std::vector<std::string>& references) {
  if (predictions.size() != references.size()) {
    throw ShapeError("predictions and references differ in length");
  }
  std::vector<PredictionPair> pairs;
  for (std::size_t i = 0; i < predictions.size(); ++i) pairs.push_back({predictions[i], references[i]});
  return pairs;
}

class Recognizer {
 public:
  explicit Recognizer(const std::filesystem::path& path)
      : checkpoint_(load_checkpoint(path)), model_(checkpoint_.to_model()) {}

  Array log_probs(const Array& image) const { return to_array(model_.infer(prepare(image))); }

  std::string predict(const Array& image, const std::string& decoder, int beam_width) const {
    return decode(model_.infer(prepare(image)), checkpoint_.alphabet,
                  parse_decoder(decoder, beam_width));
  }

  std::string predict_file(const std::filesystem::path& path, const std::string& decoder,
                           int beam_width) const {
    return decode(model_.infer(preprocess(read_image(path), prep())), checkpoint_.alphabet,
                  parse_decoder(decoder, beam_width));
  }

  std::string alphabet() const { return checkpoint_.alphabet.characters(); }
  std::pair<int, int> input_size() const {
    return {model_.config().input_height, model_.config().input_width};
  }

 private:
  PreprocessConfig prep() const {
    PreprocessConfig p;
    p.height = model_.config().input_height;
    p.width = model_.config().input_width;
    return p;
  }
  // Grayscale in [0, 1], any size.
  ImageTensor prepare(const Array& image) const {
    return preprocess(RawImage::from_gray(to_tensor(image)), prep());
  }

  Checkpoint checkpoint_;
  Model model_;
};

}  // namespace

PYBIND11_MODULE(_ctcocr, m) {
  m.doc() = "CRNN + CTC captcha recognizer";

  static py::exception<Error> error(m, "Error");
  py::register_exception<DataError>(m, "DataError", error.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", error.ptr());
  py::register_exception<IntegrityError>(m, "IntegrityError", error.ptr());
  py::register_exception<VersionError>(m, "VersionError", error.ptr());
  py::register_exception<ShapeError>(m, "ShapeError", error.ptr());
  py::register_exception<DomainError>(m, "DomainError", error.ptr());

  m.attr("DEFAULT_ALPHABET") = Alphabet::captcha_default().characters();

  m.def("ctc_loss", [](const Array& lp, const LabelSequence& label, int blank) {
    return ctc_loss(to_tensor(lp), label, blank).loss;
  }, py::arg("log_probs"), py::arg("label"), py::arg("blank"),
        "Negative log-likelihood of `label` under T x C log-probabilities.");
  m.def("ctc_gradient", [](const Array& lp, const LabelSequence& label, int blank) {
    return to_array(ctc_gradient(to_tensor(lp), label, blank));
  }, py::arg("log_probs"), py::arg("label"), py::arg("blank"),
        "Gradient with respect to the logits behind `log_probs`.");
  m.def("greedy_decode", [](const Array& lp, int blank) {
    return ctc_greedy_decode(to_tensor(lp), blank);
  }, py::arg("log_probs"), py::arg("blank"));
  m.def("beam_decode", [](const Array& lp, int blank, int width) {
    return ctc_beam_decode(to_tensor(lp), blank, width);
  }, py::arg("log_probs"), py::arg("blank"), py::arg("beam_width") = 10);
  m.def("collapse", [](const std::vector<int>& path, int blank) { return collapse(path, blank); },
        py::arg("path"), py::arg("blank"));
  m.def("min_frames", &ctc_min_frames, py::arg("label"));

  m.def("edit_distance", &edit_distance, py::arg("a"), py::arg("b"));
  m.def("char_accuracy", [](const std::vector<std::string>& p, const std::vector<std::string>& r) {
    return char_accuracy(pairs_of(p, r));
  }, py::arg("predictions"), py::arg("references"));
  m.def("word_accuracy", [](const std::vector<std::string>& p, const std::vector<std::string>& r) {
    return word_accuracy(pairs_of(p, r));
  }, py::arg("predictions"), py::arg("references"));

  m.def("synthesize", [](const std::string& text, std::uint64_t style_seed, bool clean) {
    return to_array(synthesize_captcha(text, style_seed, Alphabet::captcha_default(),
                                       clean ? SynthConfig::clean() : SynthConfig{})
                        .sample.image);
  }, py::arg("text"), py::arg("style_seed") = 0, py::arg("clean") = false,
        "Grayscale captcha image in [0, 1].");

  py::class_<Recognizer>(m, "Recognizer")
      .def(py::init<const std::filesystem::path&>(), py::arg("checkpoint"))
      .def("log_probs", &Recognizer::log_probs, py::arg("image"))
      .def("predict", &Recognizer::predict, py::arg("image"), py::arg("decoder") = "greedy",
           py::arg("beam_width") = 10)
      .def("predict_file", &Recognizer::predict_file, py::arg("path"),
           py::arg("decoder") = "greedy", py::arg("beam_width") = 10)
      .def_property_readonly("alphabet", &Recognizer::alphabet)
      .def_property_readonly("input_size", &Recognizer::input_size);
}
