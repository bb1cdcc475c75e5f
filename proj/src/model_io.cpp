#include "abrlab/model_io.hpp"

#include <bit>
#include <cstdint>
#include <cmath>
#include <cstring>
#include <span>

#include <json.hpp>

#include "abrlab/error.hpp"
#include "abrlab/io.hpp"

namespace abrlab {
namespace {

using json = nlohmann::json;

static_assert(std::endian::native == std::endian::little, "model files are written in host order");

constexpr char kMagic[8] = {'A', 'B', 'R', 'L', 'C', 'M', 'Y', '\0'};

template <typename T>
void put(std::string &out, T value) {
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.append(buf, sizeof(T));
}

class Reader {
public:
  explicit Reader(const std::string &bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    T value;
    std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }

  std::string take(std::size_t n) {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  void read_doubles(double *out, std::size_t n) {
    need(n * sizeof(double));
    std::memcpy(out, bytes_.data() + pos_, n * sizeof(double));
    pos_ += n * sizeof(double);
  }

  bool done() const { return pos_ == bytes_.size(); }

private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw DataError("model file truncated");
  }

  const std::string &bytes_;
  std::size_t pos_ = 0;
};

json config_json(const NetConfig &c) {
  return {{"levels", c.levels},
          {"history_len", c.history_len},
          {"future_horizon", c.future_horizon},
          {"conv_channels", c.conv_channels},
          {"conv_kernel", c.conv_kernel},
          {"hidden", c.hidden},
          {"recurrent", c.recurrent},
          {"seed", c.seed}};
}

NetConfig config_from_json(const json &j) {
  try {
    NetConfig c;
    c.levels = j.at("levels").get<std::size_t>();
    c.history_len = j.at("history_len").get<std::size_t>();
    c.future_horizon = j.at("future_horizon").get<std::size_t>();
    c.conv_channels = j.at("conv_channels").get<std::size_t>();
    c.conv_kernel = j.at("conv_kernel").get<std::size_t>();
    c.hidden = j.at("hidden").get<std::size_t>();
    c.recurrent = j.at("recurrent").get<bool>();
    c.seed = j.at("seed").get<std::uint64_t>();
    return c;
  } catch (const json::exception &e) {
    throw DataError(std::string("bad model config: ") + e.what());
  }
}

}  // namespace

std::string serialize_model(const PolicyNetwork &net) {
  json tensors = json::array();
  for (const TensorInfo &t : net.tensors()) tensors.push_back({{"name", t.name}, {"shape", t.shape}});
  const json header = {{"format", "abrlab-policy"},
                       {"version", kModelFormatVersion},
                       {"config", config_json(net.config())},
                       {"steps", net.step_count()},
                       {"tensors", tensors}};
  const std::string text = header.dump();

  std::string out(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kModelFormatVersion);
  put<std::uint64_t>(out, text.size());
  out += text;
  for (std::span<const double> block : {net.parameters(), net.first_moment(), net.second_moment()}) {
    for (const TensorInfo &t : net.tensors()) {
      put<std::uint32_t>(out, static_cast<std::uint32_t>(t.shape.size()));
      for (std::size_t d : t.shape) put<std::uint64_t>(out, d);
      out.append(reinterpret_cast<const char *>(block.data() + t.offset), t.size * sizeof(double));
    }
  }
  return out;
}

PolicyNetwork parse_model(const std::string &bytes) {
  Reader in(bytes);
  if (in.take(sizeof(kMagic)) != std::string(kMagic, sizeof(kMagic))) throw DataError("not a model file");
  const auto version = in.get<std::uint32_t>();
  if (version != kModelFormatVersion) throw DataError("unsupported model format version " + std::to_string(version));
  const auto header_len = in.get<std::uint64_t>();
  json header;
  try {
    header = json::parse(in.take(header_len));
  } catch (const json::exception &e) {
    throw DataError(std::string("bad model header: ") + e.what());
  }
  if (header.value("format", "") != "abrlab-policy") throw DataError("not a policy model");

  PolicyNetwork net(config_from_json(header.at("config")));
  net.set_step_count(header.value("steps", std::uint64_t{0}));
  const auto &expected = header.at("tensors");
  if (expected.size() != net.tensors().size()) throw DataError("model tensor count mismatch");
  for (std::size_t i = 0; i < expected.size(); ++i) {
    const TensorInfo &t = net.tensors()[i];
    if (expected[i].value("name", "") != t.name ||
        expected[i].at("shape").get<std::vector<std::size_t>>() != t.shape) {
      throw DataError("model tensor mismatch at " + t.name);
    }
  }
  for (std::span<double> block : {net.parameters(), net.first_moment(), net.second_moment()}) {
    for (const TensorInfo &t : net.tensors()) {
      const auto rank = in.get<std::uint32_t>();
      if (rank != t.shape.size()) throw DataError("tensor rank mismatch at " + t.name);
      for (std::size_t d : t.shape) {
        if (in.get<std::uint64_t>() != d) throw DataError("tensor shape mismatch at " + t.name);
      }
      in.read_doubles(block.data() + t.offset, t.size);
    }
  }
  if (!in.done()) throw DataError("trailing bytes in model file");
  for (double p : net.parameters()) {
    if (!std::isfinite(p)) throw DataError("non-finite parameter in model file");
  }
  return net;
}

void save_model(const PolicyNetwork &net, const std::string &path) { write_file(path, serialize_model(net)); }

PolicyNetwork load_model(const std::string &path) { return parse_model(read_file(path)); }

}  // namespace abrlab
