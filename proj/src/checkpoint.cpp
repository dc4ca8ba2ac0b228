#include <cstring>
#include <fstream>

#include "coref/errors.hpp"
#include "coref/model.hpp"

namespace coref {

namespace {

constexpr char kMagic[8] = {'C', 'O', 'R', 'F', 'C', 'K', 'P', 'T'};

template <typename T>
void write_pod(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof value);
}

template <typename T>
T read_pod(std::istream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof value);
  if (!in) throw FormatError(0, "truncated checkpoint");
  return value;
}

}  // namespace

// Layout: magic, u32 version, u64 header size, JSON header, then each tensor's
// doubles in column-major order, in the header's tensor order.
void save_checkpoint(const CorefModel& model, const std::filesystem::path& path) {
  nlohmann::json header;
  header["config"] = to_json(model.config());
  header["config_hash"] = config_hash(model.config());
  header["seed"] = model.config().encoder.seed;
  header["vocab"] = model.vocab().tokens();
  nlohmann::json tensors = nlohmann::json::array();
  ModelWeights::visit(model.weights(), [&](const std::string& name, const Matrix& m) {
    tensors.push_back({{"name", name}, {"rows", m.rows()}, {"cols", m.cols()}});
  });
  header["tensors"] = tensors;
  const std::string text = header.dump();

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(kMagic, sizeof kMagic);
  write_pod<std::uint32_t>(out, kCheckpointVersion);
  write_pod<std::uint64_t>(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  ModelWeights::visit(model.weights(), [&](const std::string&, const Matrix& m) {
    out.write(reinterpret_cast<const char*>(m.data()),
              static_cast<std::streamsize>(m.size() * sizeof(double)));
  });
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

CorefModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  char magic[sizeof kMagic];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
    throw FormatError(0, path.string() + " is not a checkpoint");
  }
  const auto version = read_pod<std::uint32_t>(in);
  if (version != kCheckpointVersion) {
    throw FormatError(0, "unsupported checkpoint version " + std::to_string(version));
  }
  const auto size = read_pod<std::uint64_t>(in);
  std::string text(size, '\0');
  in.read(text.data(), static_cast<std::streamsize>(size));
  if (!in) throw FormatError(0, "truncated checkpoint header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(0, std::string("bad checkpoint header: ") + e.what());
  }

  ModelConfig config = model_config_from_json(header.at("config"));
  config.encoder.seed = header.at("seed").get<std::uint64_t>();
  Vocabulary vocab(header.at("vocab").get<std::vector<std::string>>());
  ModelWeights weights = ModelWeights::zeros(config);
  const auto& tensors = header.at("tensors");
  std::size_t index = 0;
  ModelWeights::visit(weights, [&](const std::string& name, Matrix& m) {
    if (index >= tensors.size() || tensors[index].at("name") != name ||
        tensors[index].at("rows").get<Eigen::Index>() != m.rows() ||
        tensors[index].at("cols").get<Eigen::Index>() != m.cols()) {
      throw FormatError(0, "checkpoint tensor layout does not match " + name);
    }
    in.read(reinterpret_cast<char*>(m.data()),
            static_cast<std::streamsize>(m.size() * sizeof(double)));
    if (!in) throw FormatError(0, "truncated checkpoint tensor " + name);
    ++index;
  });
  if (index != tensors.size()) throw FormatError(0, "checkpoint has extra tensors");
  return CorefModel(std::move(config), std::move(vocab), std::move(weights));
}

}  // namespace coref
