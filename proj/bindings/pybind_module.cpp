// bindings/pybind_module.cpp
//
// Copyright 2026  The seqkd authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <set>
#include <string>
#include <vector>

#include "seqkd/analysis.hpp"
#include "seqkd/data.hpp"
#include "seqkd/distill.hpp"
#include "seqkd/errors.hpp"
#include "seqkd/metrics.hpp"
#include "seqkd/model.hpp"
#include "seqkd/textnorm.hpp"

namespace py = pybind11;

namespace {

seqkd::NormMode ModeArg(const std::string &name) {
  return seqkd::ParseNormMode(name);
}

py::dict BreakdownDict(const seqkd::EditBreakdown &b) {
  py::dict d;
  d["substitutions"] = b.substitutions;
  d["deletions"] = b.deletions;
  d["insertions"] = b.insertions;
  d["reference_length"] = b.referenceLength;
  d["total"] = b.Total();
  return d;
}

}  // namespace

PYBIND11_MODULE(_seqkd, m) {
  m.doc() = "Arabic transcription toolkit: normalization, error rates, "
            "error triage and sequence distillation models";

  py::register_exception<seqkd::Error>(m, "SeqkdError");

  m.def(
      "normalize",
      [](const std::string &text, const std::string &mode) {
        return seqkd::Normalize(text, ModeArg(mode));
      },
      py::arg("text"), py::arg("mode") = "normalized",
      "Normalize text under the named mode: orthographic, normalized or "
      "normalized_nd.");

  m.def("tokenize", &seqkd::Tokenize, py::arg("text"),
        "Whitespace-delimited tokens.");

  m.def(
      "edit_distance",
      [](const std::vector<std::string> &ref,
         const std::vector<std::string> &hyp) {
        return BreakdownDict(seqkd::EditDistance(ref, hyp));
      },
      py::arg("ref"), py::arg("hyp"),
      "Levenshtein breakdown between token sequences.");

  m.def(
      "wer",
      [](const std::string &ref, const std::string &hyp,
         const std::string &mode) {
        return seqkd::Wer(ref, hyp, ModeArg(mode));
      },
      py::arg("ref"), py::arg("hyp"), py::arg("mode") = "normalized_nd",
      "Word error rate in percent; both sides normalized first.");

  m.def(
      "cer",
      [](const std::string &ref, const std::string &hyp,
         const std::string &mode) {
        return seqkd::Cer(ref, hyp, ModeArg(mode));
      },
      py::arg("ref"), py::arg("hyp"), py::arg("mode") = "normalized_nd",
      "Character error rate in percent; both sides normalized first.");

  m.def(
      "flag_errors",
      [](const std::string &ref, const std::string &hyp,
         const std::set<std::string> &lexicon) {
        py::list out;
        for (const auto &f : seqkd::FlagErrors(ref, hyp, lexicon)) {
          py::dict d;
          d["flag"] = seqkd::FlagName(f.category);
          d["evidence"] = f.evidence;
          out.append(d);
        }
        return out;
      },
      py::arg("ref"), py::arg("hyp"),
      py::arg("lexicon") = std::set<std::string>{},
      "Triage one hypothesis; returns [{flag, evidence}] in fixed order.");

  m.def("select_layers", &seqkd::SelectLayers, py::arg("teacher_layers"),
        py::arg("student_layers"),
        "Teacher block indices kept by a shallower student.");

  py::class_<seqkd::ModelConfig>(m, "ModelConfig")
      .def_readonly("d_model", &seqkd::ModelConfig::dModel)
      .def_readonly("n_heads", &seqkd::ModelConfig::nHeads)
      .def_readonly("encoder_layers", &seqkd::ModelConfig::encoderLayers)
      .def_readonly("decoder_layers", &seqkd::ModelConfig::decoderLayers)
      .def_readonly("ffn_dim", &seqkd::ModelConfig::ffnDim)
      .def_readonly("frame_dim", &seqkd::ModelConfig::frameDim)
      .def_readonly("max_source_len", &seqkd::ModelConfig::maxSourceLen)
      .def_readonly("max_target_len", &seqkd::ModelConfig::maxTargetLen)
      .def_readonly("vocab_codepoints", &seqkd::ModelConfig::vocabCodepoints)
      .def("__repr__", [](const seqkd::ModelConfig &c) {
        return "ModelConfig(" + c.ToJson() + ")";
      });

  py::class_<seqkd::Model>(m, "Model")
      .def(py::init([](const std::string &configJson) {
             return seqkd::Model(seqkd::ModelConfig::FromJson(configJson));
           }),
           py::arg("config_json"),
           "Build an uninitialized model from a config JSON string.")
      .def("init_random", &seqkd::Model::InitRandom, py::arg("seed"))
      .def_static("load", &seqkd::Model::Load, py::arg("path"),
                  "Load a checkpoint from disk.")
      .def("save", &seqkd::Model::Save, py::arg("path"))
      .def_property_readonly("config", &seqkd::Model::config,
                             py::return_value_policy::copy)
      .def(
          "transcribe",
          [](const seqkd::Model &model, const Eigen::MatrixXf &frames) {
            return model.Transcribe(frames);
          },
          py::arg("frames"),
          "Greedy-decode one utterance; frames is a (time, frame_dim) "
          "float array.");

  m.def(
      "read_corpus",
      [](const std::string &manifestPath) {
        py::list out;
        for (const auto &u : seqkd::ReadCorpus(manifestPath)) {
          py::dict d;
          d["id"] = u.id;
          d["reference"] = u.reference;
          d["dialect"] = u.dialect;
          d["dataset"] = u.dataset;
          d["frames"] = u.frames;
          out.append(d);
        }
        return out;
      },
      py::arg("manifest_path"),
      "Read a manifest into a list of utterance dicts.");
}
