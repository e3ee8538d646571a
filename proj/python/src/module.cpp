#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "binspp/binspp.hpp"

namespace py = pybind11;
using namespace binspp;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

std::vector<double> to_vector(const Array& a) {
  if (a.ndim() != 1) throw py::value_error("expected a 1-D array");
  return {a.data(), a.data() + a.size()};
}

RealMatrix to_matrix(const Array& a) {
  if (a.ndim() != 2) throw py::value_error("expected a 2-D array");
  RealMatrix m(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)));
  std::copy(a.data(), a.data() + a.size(), m.data().begin());
  return m;
}

template <typename T>
py::array_t<T> to_array(const Matrix<T>& m) {
  py::array_t<T> out({m.rows(), m.cols()});
  std::copy(m.data().begin(), m.data().end(), out.mutable_data());
  return out;
}

py::array_t<double> to_array(const std::vector<double>& v) {
  py::array_t<double> out(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

Utterance utterance(const Array& samples) {
  Utterance u;
  u.samples = to_vector(samples);
  return u;
}

PowerSpectrogram power(const Array& a, PowerRole role = PowerRole::Noisy) {
  PowerSpectrogram p;
  p.values = to_matrix(a);
  p.role = role;
  return p;
}

std::vector<std::uint8_t> label_vector(const py::array_t<std::uint8_t, py::array::forcecast>& a) {
  return {a.data(), a.data() + a.size()};
}

ModelConfig config_from(const py::dict& d) {
  return model_config_from_json(nlohmann::json::parse(py::str(py::module_::import("json").attr("dumps")(d)).cast<std::string>()));
}

py::dict report_dict(const MetricsReport& r) {
  return py::module_::import("json").attr("loads")(report_to_json(r));
}

}  // namespace

PYBIND11_MODULE(_binspp, m) {
  m.doc() = "Frequency bin-wise speech presence probability estimation";

  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);

  m.attr("SAMPLE_RATE") = kSampleRate;
  m.attr("NUM_BINS") = kNumBins;
  m.attr("FRAME_LEN") = kFrameLen;
  m.attr("HOP") = kHop;

  m.def("read_wav", [](const std::filesystem::path& p) { return to_array(read_wav(p).samples); });
  m.def("write_wav", [](const std::filesystem::path& p, const Array& samples) {
    write_wav(p, utterance(samples));
  });
  m.def("mix_at_snr", [](const Array& clean, const Array& noise, double snr_db, std::uint64_t seed) {
    const auto r = mix_at_snr(utterance(clean), utterance(noise), snr_db, seed);
    py::dict d;
    d["noisy"] = to_array(r.noisy.samples);
    d["clean"] = to_array(r.clean.samples);
    d["noise"] = to_array(r.scaled_noise.samples);
    d["gain"] = r.gain;
    return d;
  }, py::arg("clean"), py::arg("noise"), py::arg("snr_db"), py::arg("seed") = 0);

  m.def("hann_window", [](std::size_t n) { return to_array(hann_window(n)); });
  m.def("power_spectrogram", [](const Array& samples) {
    return to_array(power_spec(stft(to_vector(samples))).values);
  }, "K x L periodogram |Y(k,l)|^2");
  m.def("log_power", [](const Array& samples) { return to_array(log_power_features(utterance(samples)).values); });

  m.def("smooth_noise_psd", [](const Array& noise_power, double alpha) {
    return to_array(smooth_noise_psd(power(noise_power, PowerRole::Noise), alpha).values);
  }, py::arg("noise_power"), py::arg("alpha") = 0.8);
  m.def("oracle_spp", [](const Array& noisy_power, const Array& noise_psd, double prior_ratio, double xi_h1) {
    TargetConfig cfg;
    cfg.prior_ratio = prior_ratio;
    cfg.xi_h1 = xi_h1;
    PowerSpectrogram d = power(noise_psd, PowerRole::SmoothedNoise);
    return to_array(oracle_spp(power(noisy_power), d, cfg).values);
  }, py::arg("noisy_power"), py::arg("noise_psd"), py::arg("prior_ratio") = 1.0,
     py::arg("xi_h1") = kDefaultXiH1);
  m.def("ground_truth_labels", [](const Array& clean_power, double threshold_db) {
    return to_array(ground_truth_labels(power(clean_power, PowerRole::Clean), threshold_db).values);
  }, py::arg("clean_power"), py::arg("threshold_db") = 60.0);
  m.def("unbiased_mmse_spp", [](const Array& noisy_power) {
    return to_array(unbiased_mmse_spp(power(noisy_power)).spp.values);
  });

  m.def("roc_curve", [](const Array& scores, const py::array_t<std::uint8_t, py::array::forcecast>& labels) {
    const auto s = to_vector(scores.attr("ravel")().cast<Array>());
    const auto c = roc_curve(s, label_vector(labels));
    std::vector<double> fa, pd, th;
    for (const auto& p : c.points) {
      fa.push_back(p.p_fa);
      pd.push_back(p.p_d);
      th.push_back(p.threshold);
    }
    return py::make_tuple(to_array(fa), to_array(pd), to_array(th));
  }, "Returns (p_fa, p_d, thresholds).");
  m.def("auc", [](const Array& scores, const py::array_t<std::uint8_t, py::array::forcecast>& labels) {
    const auto s = to_vector(scores.attr("ravel")().cast<Array>());
    return auc(roc_curve(s, label_vector(labels)));
  });
  m.def("pd_at_pfa", [](const Array& scores, const py::array_t<std::uint8_t, py::array::forcecast>& labels,
                        double pfa) {
    const auto s = to_vector(scores.attr("ravel")().cast<Array>());
    return pd_at_pfa(roc_curve(s, label_vector(labels)), pfa);
  }, py::arg("scores"), py::arg("labels"), py::arg("pfa") = 0.05);

  m.def("synth_corpus", [](std::size_t utterances, double seconds, std::uint64_t seed) {
    SynthConfig cfg;
    cfg.utterances = utterances;
    cfg.seconds = seconds;
    cfg.seed = seed;
    py::list out;
    for (const auto& s : synth_corpus(cfg)) {
      py::dict d;
      d["noisy"] = to_array(s.mix.noisy.samples);
      d["clean"] = to_array(s.mix.clean.samples);
      d["noise"] = to_array(s.mix.scaled_noise.samples);
      d["snr_db"] = s.spec.snr_db;
      d["tone_bins"] = s.tone_bins;
      out.append(d);
    }
    return out;
  }, py::arg("utterances") = 20, py::arg("seconds") = 10.0, py::arg("seed") = 1);

  py::class_<ModelBundle>(m, "Bundle")
      .def_property_readonly("kind", [](const ModelBundle& b) { return to_string(b.config.kind); })
      .def_property_readonly("neighbors", [](const ModelBundle& b) { return b.config.neighbors; })
      .def_property_readonly("params", [](const ModelBundle& b) { return count_params(b); })
      .def_property_readonly("macs_per_frame", [](const ModelBundle& b) { return count_macs_per_frame(b); })
      .def_property_readonly("checksum", [](const ModelBundle& b) { return bundle_checksum(b); })
      .def("infer", [](const ModelBundle& b, const Array& samples) {
        py::gil_scoped_release release;
        auto out = infer(b, utterance(samples));
        py::gil_scoped_acquire acquire;
        return to_array(out.values);
      }, "K x L SPP estimate for a 16 kHz waveform")
      .def("save", [](const ModelBundle& b, const std::filesystem::path& p) { save_bundle(b, p); })
      .def("to_json", [](const ModelBundle& b) { return bundle_to_json(b); });

  m.def("load_bundle", [](const std::filesystem::path& p) { return load_bundle(p); });
  m.def("init_bundle", [](const py::dict& config) { return init_bundle(config_from(config), {}); },
        py::arg("config") = py::dict());

  m.def("train", [](const py::list& noisy, const py::list& noise, const py::dict& config, unsigned workers) {
    if (noisy.size() != noise.size()) throw py::value_error("noisy and noise lists differ in length");
    std::vector<MixResult> mixes;
    for (std::size_t i = 0; i < noisy.size(); ++i) {
      MixResult r;
      r.noisy = utterance(noisy[i].cast<Array>());
      r.scaled_noise = utterance(noise[i].cast<Array>());
      mixes.push_back(std::move(r));
    }
    const ModelConfig cfg = config_from(config);
    py::gil_scoped_release release;
    const auto corpus = prepare_corpus(mixes);
    auto r = cfg.kind == ModelKind::Binwise ? train_binwise(corpus, cfg, {workers, {}})
                                            : train_typical(corpus, cfg, {workers, {}});
    py::gil_scoped_acquire acquire;
    return py::make_tuple(std::move(r.bundle), r.initial_loss, r.epoch_loss);
  }, py::arg("noisy"), py::arg("noise"), py::arg("config") = py::dict(), py::arg("workers") = 1,
     "Trains on (noisy, scaled noise) waveform pairs. Returns (bundle, initial_loss, epoch_losses).");

  m.def("evaluate", [](const py::list& scores, const py::list& labels, const std::string& name) {
    if (scores.size() != labels.size()) throw py::value_error("scores and labels differ in length");
    std::vector<SppMatrix> s(scores.size());
    std::vector<LabelMatrix> l(labels.size());
    for (std::size_t i = 0; i < scores.size(); ++i) {
      s[i].values = to_matrix(scores[i].cast<Array>());
      const auto lab = labels[i].cast<py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>>();
      if (lab.ndim() != 2) throw py::value_error("labels must be 2-D");
      l[i].values = Matrix<std::uint8_t>(static_cast<std::size_t>(lab.shape(0)), static_cast<std::size_t>(lab.shape(1)));
      std::copy(lab.data(), lab.data() + lab.size(), l[i].values.data().begin());
    }
    return report_dict(evaluate(s, l, {name, "", "", 0, 0}).report);
  }, py::arg("scores"), py::arg("labels"), py::arg("name") = "estimator");

  m.def("count_params", [](const py::dict& config) { return count_params(init_bundle(config_from(config), {})); },
        py::arg("config") = py::dict());
  m.def("count_macs_per_frame", [](const py::dict& config) {
    return count_macs_per_frame(init_bundle(config_from(config), {}));
  }, py::arg("config") = py::dict());
}
