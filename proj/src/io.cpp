#include "photonids/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace photonids::io {

namespace {

static_assert(std::endian::native == std::endian::little,
              "file formats assume a little-endian host");

template <class T>
void put(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw Error(ErrorCategory::Io, "unexpected end of file");
  return v;
}

void put_string(std::ostream& os, const std::string& s) {
  if (s.size() > 0xffff)
    throw Error(ErrorCategory::Io, "string too long for format");
  put<std::uint16_t>(os, static_cast<std::uint16_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::istream& is) {
  auto n = get<std::uint16_t>(is);
  std::string s(n, '\0');
  is.read(s.data(), n);
  if (!is) throw Error(ErrorCategory::Io, "unexpected end of file");
  return s;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorCategory::Io, "cannot open for writing: " + path);
  return os;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorCategory::Io, "cannot open for reading: " + path);
  return is;
}

void expect_magic(std::istream& is, const char* magic,
                  const std::string& what) {
  char buf[4];
  is.read(buf, 4);
  if (!is || std::memcmp(buf, magic, 4) != 0)
    throw Error(ErrorCategory::Io, "not a " + what + " file");
}

}  // namespace

void write_event_file(const std::string& path, const EventFileHeader& header,
                      const std::vector<CapturedEvent>& events) {
  if (events.size() > 0xffffffffull)
    throw Error(ErrorCategory::Io, "too many events for the format");
  auto os = open_out(path);
  os.write("PHID", 4);
  put(os, header.version);
  put(os, header.sample_rate_hz);
  put(os, header.pre_samples);
  put(os, header.post_samples);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(events.size()));
  int window = header.window();
  for (const auto& ev : events) {
    if (static_cast<int>(ev.samples.size()) != window)
      throw Error(ErrorCategory::Io, "event length does not match header");
    put(os, ev.trigger_index);
    put<std::uint8_t>(os, static_cast<std::uint8_t>(ev.label));
    os.write(reinterpret_cast<const char*>(ev.samples.data()),
             static_cast<std::streamsize>(ev.samples.size() * 2));
  }
  if (!os) throw Error(ErrorCategory::Io, "write failed: " + path);
}

EventFile read_event_file(const std::string& path) {
  auto is = open_in(path);
  expect_magic(is, "PHID", "event capture");
  EventFile f;
  f.header.version = get<std::uint16_t>(is);
  if (f.header.version != 1)
    throw Error(ErrorCategory::Io, "unsupported event file version");
  f.header.sample_rate_hz = get<std::uint64_t>(is);
  f.header.pre_samples = get<std::uint16_t>(is);
  f.header.post_samples = get<std::uint16_t>(is);
  auto count = get<std::uint32_t>(is);
  int window = f.header.window();
  f.events.resize(count);
  for (auto& ev : f.events) {
    ev.trigger_index = get<std::uint64_t>(is);
    auto lab = get<std::uint8_t>(is);
    if (lab != 0 && lab != 1 && lab != 255)
      throw Error(ErrorCategory::Io, "bad label byte in event file");
    ev.label = static_cast<Label>(lab);
    ev.samples.resize(window);
    is.read(reinterpret_cast<char*>(ev.samples.data()), window * 2);
    if (!is) throw Error(ErrorCategory::Io, "truncated event file");
  }
  return f;
}

void write_stream_file(const std::string& path, std::uint64_t sample_rate_hz,
                       const std::vector<std::int16_t>& samples) {
  auto os = open_out(path);
  os.write("PHST", 4);
  put<std::uint16_t>(os, 1);
  put(os, sample_rate_hz);
  put<std::uint64_t>(os, samples.size());
  os.write(reinterpret_cast<const char*>(samples.data()),
           static_cast<std::streamsize>(samples.size() * 2));
  if (!os) throw Error(ErrorCategory::Io, "write failed: " + path);
}

StreamFile read_stream_file(const std::string& path) {
  auto is = open_in(path);
  expect_magic(is, "PHST", "sample stream");
  auto version = get<std::uint16_t>(is);
  if (version != 1)
    throw Error(ErrorCategory::Io, "unsupported stream file version");
  StreamFile f;
  f.sample_rate_hz = get<std::uint64_t>(is);
  auto count = get<std::uint64_t>(is);
  f.samples.resize(count);
  is.read(reinterpret_cast<char*>(f.samples.data()),
          static_cast<std::streamsize>(count * 2));
  if (!is) throw Error(ErrorCategory::Io, "truncated stream file");
  return f;
}

void write_phnn(const std::string& path, const std::string& kind,
                const std::vector<NamedTensor>& tensors) {
  auto os = open_out(path);
  os.write("PHNN", 4);
  put<std::uint16_t>(os, 1);
  put_string(os, kind);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& t : tensors) {
    put_string(os, t.name);
    put<std::uint8_t>(os, static_cast<std::uint8_t>(t.shape.size()));
    std::size_t n = 1;
    for (int d : t.shape) {
      put<std::uint32_t>(os, static_cast<std::uint32_t>(d));
      n *= static_cast<std::size_t>(d);
    }
    if (n != t.data.size())
      throw Error(ErrorCategory::Io, "tensor size mismatch: " + t.name);
  }
  for (const auto& t : tensors)
    os.write(reinterpret_cast<const char*>(t.data.data()),
             static_cast<std::streamsize>(t.data.size() * 4));
  if (!os) throw Error(ErrorCategory::Io, "write failed: " + path);
}

Checkpoint read_phnn(const std::string& path) {
  auto is = open_in(path);
  expect_magic(is, "PHNN", "model checkpoint");
  auto version = get<std::uint16_t>(is);
  if (version != 1)
    throw Error(ErrorCategory::Io, "unsupported checkpoint version");
  Checkpoint ck;
  ck.kind = get_string(is);
  auto count = get<std::uint32_t>(is);
  ck.tensors.resize(count);
  for (auto& t : ck.tensors) {
    t.name = get_string(is);
    auto rank = get<std::uint8_t>(is);
    std::size_t n = 1;
    t.shape.resize(rank);
    for (auto& d : t.shape) {
      d = static_cast<int>(get<std::uint32_t>(is));
      n *= static_cast<std::size_t>(d);
    }
    t.data.resize(n);
  }
  for (auto& t : ck.tensors) {
    is.read(reinterpret_cast<char*>(t.data.data()),
            static_cast<std::streamsize>(t.data.size() * 4));
    if (!is) throw Error(ErrorCategory::Io, "truncated checkpoint");
  }
  return ck;
}

namespace {

NamedTensor tensor_of(const std::string& name, const nn::Tensor<float>& t) {
  return {name, t.shape, {t.data.begin(), t.data.end()}};
}

void tensor_into(const Checkpoint& ck, std::size_t i, const std::string& name,
                 nn::Tensor<float>& dst) {
  if (i >= ck.tensors.size() || ck.tensors[i].name != name ||
      ck.tensors[i].shape != dst.shape)
    throw Error(ErrorCategory::Io, "checkpoint layout mismatch at " + name);
  dst.data.assign(ck.tensors[i].data.begin(), ck.tensors[i].data.end());
}

}  // namespace

void save_regressor(const std::string& path, const CnnModel& model,
                    const std::string& sidecar_json) {
  std::vector<NamedTensor> ts;
  ts.push_back(tensor_of("conv1.weight", model.conv1.weight));
  ts.push_back(tensor_of("conv1.bias", model.conv1.bias));
  ts.push_back(tensor_of("bn1.gamma", model.bn1.gamma));
  ts.push_back(tensor_of("bn1.beta", model.bn1.beta));
  ts.push_back(tensor_of("bn1.running_mean", model.bn1.running_mean));
  ts.push_back(tensor_of("bn1.running_var", model.bn1.running_var));
  ts.push_back(tensor_of("conv2.weight", model.conv2.weight));
  ts.push_back(tensor_of("conv2.bias", model.conv2.bias));
  ts.push_back(tensor_of("bn2.gamma", model.bn2.gamma));
  ts.push_back(tensor_of("bn2.beta", model.bn2.beta));
  ts.push_back(tensor_of("bn2.running_mean", model.bn2.running_mean));
  ts.push_back(tensor_of("bn2.running_var", model.bn2.running_var));
  ts.push_back(tensor_of("fc1.weight", model.fc1.weight));
  ts.push_back(tensor_of("fc1.bias", model.fc1.bias));
  ts.push_back(tensor_of("fc2.weight", model.fc2.weight));
  ts.push_back(tensor_of("fc2.bias", model.fc2.bias));
  write_phnn(path, "cnn_regressor", ts);

  nlohmann::json meta;
  if (!sidecar_json.empty()) meta = nlohmann::json::parse(sidecar_json);
  meta["target_mean"] = model.target_mean;
  meta["target_std"] = model.target_std;
  meta["init_seed"] = model.init_seed;
  meta["dropout_p"] = model.dropout.p;
  write_text_file(path + ".json", meta.dump(2) + "\n");
}

void load_regressor(const std::string& path, CnnModel& model,
                    std::string* sidecar_json) {
  auto ck = read_phnn(path);
  if (ck.kind != "cnn_regressor")
    throw Error(ErrorCategory::Io, "checkpoint is not a cnn_regressor");
  std::size_t i = 0;
  tensor_into(ck, i++, "conv1.weight", model.conv1.weight);
  tensor_into(ck, i++, "conv1.bias", model.conv1.bias);
  tensor_into(ck, i++, "bn1.gamma", model.bn1.gamma);
  tensor_into(ck, i++, "bn1.beta", model.bn1.beta);
  tensor_into(ck, i++, "bn1.running_mean", model.bn1.running_mean);
  tensor_into(ck, i++, "bn1.running_var", model.bn1.running_var);
  tensor_into(ck, i++, "conv2.weight", model.conv2.weight);
  tensor_into(ck, i++, "conv2.bias", model.conv2.bias);
  tensor_into(ck, i++, "bn2.gamma", model.bn2.gamma);
  tensor_into(ck, i++, "bn2.beta", model.bn2.beta);
  tensor_into(ck, i++, "bn2.running_mean", model.bn2.running_mean);
  tensor_into(ck, i++, "bn2.running_var", model.bn2.running_var);
  tensor_into(ck, i++, "fc1.weight", model.fc1.weight);
  tensor_into(ck, i++, "fc1.bias", model.fc1.bias);
  tensor_into(ck, i++, "fc2.weight", model.fc2.weight);
  tensor_into(ck, i++, "fc2.bias", model.fc2.bias);

  auto text = read_text_file(path + ".json");
  auto meta = nlohmann::json::parse(text);
  model.target_mean = meta.at("target_mean").get<std::array<double, 4>>();
  model.target_std = meta.at("target_std").get<std::array<double, 4>>();
  if (meta.contains("init_seed"))
    model.init_seed = meta["init_seed"].get<std::uint64_t>();
  if (sidecar_json) *sidecar_json = text;
}

void save_classifier(const std::string& path, const FcnnModel& model,
                     const std::string& sidecar_json) {
  std::vector<NamedTensor> ts;
  const std::array<const nn::Dense<float>*, 5> layers = {
      &model.fc1, &model.fc2, &model.fc3, &model.fc4, &model.fc5};
  for (std::size_t i = 0; i < layers.size(); ++i) {
    ts.push_back(tensor_of("fc" + std::to_string(i + 1) + ".weight",
                           layers[i]->weight));
    ts.push_back(
        tensor_of("fc" + std::to_string(i + 1) + ".bias", layers[i]->bias));
  }
  write_phnn(path, "fcnn_classifier", ts);

  nlohmann::json meta;
  if (!sidecar_json.empty()) meta = nlohmann::json::parse(sidecar_json);
  meta["input_dim"] = model.input_dim;
  meta["input_mean"] = model.input_mean;
  meta["input_std"] = model.input_std;
  meta["init_seed"] = model.init_seed;
  write_text_file(path + ".json", meta.dump(2) + "\n");
}

FcnnModel load_classifier(const std::string& path, std::string* sidecar_json) {
  auto text = read_text_file(path + ".json");
  auto meta = nlohmann::json::parse(text);
  FcnnModel model(meta.at("input_dim").get<int>());
  auto ck = read_phnn(path);
  if (ck.kind != "fcnn_classifier")
    throw Error(ErrorCategory::Io, "checkpoint is not a fcnn_classifier");
  const std::array<nn::Dense<float>*, 5> layers = {
      &model.fc1, &model.fc2, &model.fc3, &model.fc4, &model.fc5};
  std::size_t i = 0;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    tensor_into(ck, i++, "fc" + std::to_string(l + 1) + ".weight",
                layers[l]->weight);
    tensor_into(ck, i++, "fc" + std::to_string(l + 1) + ".bias",
                layers[l]->bias);
  }
  model.input_mean = meta.at("input_mean").get<std::vector<double>>();
  model.input_std = meta.at("input_std").get<std::vector<double>>();
  if (meta.contains("init_seed"))
    model.init_seed = meta["init_seed"].get<std::uint64_t>();
  if (sidecar_json) *sidecar_json = text;
  return model;
}

std::string anchor_to_json(const anchor::AnchorModel& model) {
  nlohmann::json j;
  j["scale_factor"] = model.scale_factor;
  for (int k = 0; k < 4; ++k) {
    const auto& f = model.feature[static_cast<std::size_t>(k)];
    j["features"][kFeatureNames[static_cast<std::size_t>(k)]] = {
        {"mu", f.mode},
        {"delta", f.ruler},
        {"h", f.bandwidth},
        {"min", f.min},
        {"max", f.max}};
  }
  return j.dump(2) + "\n";
}

anchor::AnchorModel anchor_from_json(const std::string& text) {
  auto j = nlohmann::json::parse(text);
  anchor::AnchorModel m;
  m.scale_factor = j.at("scale_factor").get<double>();
  for (int k = 0; k < 4; ++k) {
    const auto& f = j.at("features").at(kFeatureNames[static_cast<std::size_t>(k)]);
    auto& dst = m.feature[static_cast<std::size_t>(k)];
    dst.mode = f.at("mu").get<double>();
    dst.ruler = f.at("delta").get<double>();
    dst.bandwidth = f.at("h").get<double>();
    dst.min = f.at("min").get<double>();
    dst.max = f.at("max").get<double>();
  }
  m.validate();
  return m;
}

void save_anchor(const std::string& path, const anchor::AnchorModel& model) {
  write_text_file(path, anchor_to_json(model));
}

anchor::AnchorModel load_anchor(const std::string& path) {
  return anchor_from_json(read_text_file(path));
}

std::string calibrator_to_json(const calibrate::CalibratorModel& model) {
  nlohmann::json j;
  for (int k = 0; k < 4; ++k) {
    const auto& c = model.channel[static_cast<std::size_t>(k)];
    j["channels"][kFeatureNames[static_cast<std::size_t>(k)]] = {
        {"t", c.knot_t},
        {"u", c.knot_u},
        {"slope", c.slope},
        {"left_slope", c.slope.front()},
        {"right_slope", c.slope.back()}};
  }
  return j.dump(2) + "\n";
}

calibrate::CalibratorModel calibrator_from_json(const std::string& text) {
  auto j = nlohmann::json::parse(text);
  calibrate::CalibratorModel m;
  for (int k = 0; k < 4; ++k) {
    const auto& c = j.at("channels").at(kFeatureNames[static_cast<std::size_t>(k)]);
    auto& dst = m.channel[static_cast<std::size_t>(k)];
    dst.knot_t = c.at("t").get<std::vector<double>>();
    dst.knot_u = c.at("u").get<std::vector<double>>();
    dst.slope = c.at("slope").get<std::vector<double>>();
    dst.validate();
  }
  return m;
}

void save_calibrator(const std::string& path,
                     const calibrate::CalibratorModel& model) {
  write_text_file(path, calibrator_to_json(model));
}

calibrate::CalibratorModel load_calibrator(const std::string& path) {
  return calibrator_from_json(read_text_file(path));
}

std::string read_text_file(const std::string& path) {
  auto is = open_in(path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  auto os = open_out(path);
  os.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!os) throw Error(ErrorCategory::Io, "write failed: " + path);
}

std::uint64_t fnv1a(const void* data, std::size_t size, std::uint64_t seed) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = seed;
  for (std::size_t i = 0; i < size; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

std::uint64_t event_file_hash(const std::vector<CapturedEvent>& events) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const auto& ev : events) {
    h = fnv1a(&ev.trigger_index, sizeof(ev.trigger_index), h);
    auto lab = static_cast<std::uint8_t>(ev.label);
    h = fnv1a(&lab, 1, h);
    h = fnv1a(ev.samples.data(), ev.samples.size() * 2, h);
  }
  return h;
}

}  // namespace photonids::io
