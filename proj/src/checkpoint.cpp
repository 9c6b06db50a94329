#include "fsed/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "fsed/error.hpp"
#include "fsed/json_io.hpp"

namespace fsed {

namespace fs = std::filesystem;

namespace {

constexpr char kMagic[8] = {'F', 'S', 'E', 'D', 'C', 'K', 'P', 'T'};

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

void append_tensor(std::string& bin, const Matrix& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      const double v = m(r, c);
      char buf[sizeof(double)];
      std::memcpy(buf, &v, sizeof v);
      bin.append(buf, sizeof buf);
    }
}

Matrix read_tensor(const std::string& bin, std::size_t offset, Eigen::Index rows, Eigen::Index cols) {
  const std::size_t bytes = sizeof(double) * static_cast<std::size_t>(rows * cols);
  if (offset + bytes > bin.size()) throw DataError("checkpoint params.bin is truncated");
  Matrix m(rows, cols);
  const char* p = bin.data() + offset;
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c, p += sizeof(double)) std::memcpy(&m(r, c), p, sizeof(double));
  return m;
}

}  // namespace

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write '" + tmp.string() + "'");
    out << content;
    if (!out.flush()) throw DataError("short write to '" + tmp.string() + "'");
  }
  fs::rename(tmp, path);
}

void save_checkpoint(const PromptModel& model, const fs::path& dir, const nlohmann::ordered_json& metadata) {
  std::string bin(kMagic, sizeof kMagic);
  ojson tensors = ojson::array();
  auto add = [&](const std::string& name, const Matrix& m) {
    tensors.push_back({{"name", name}, {"rows", m.rows()}, {"cols", m.cols()}, {"offset", bin.size()}});
    append_tensor(bin, m);
  };
  for (const auto& t : model.encoder().parameters()) add(t.name, t.value);
  add("prototypes", model.prototypes().vectors);

  const auto& spec = model.encoder().spec();
  ojson manifest;
  manifest["format"] = kCheckpointFormat;
  manifest["encoder"] = encoder_spec_json(spec);
  manifest["vocab"] = spec.vocab.tokens();
  manifest["prompt"] = prompt_config_json(model.prompt_config());
  manifest["labels"] = model.labels().labels();
  manifest["options"] = model_options_json(model.options());
  manifest["prototype_seed"] = model.prototypes().seed;
  manifest["tensors"] = tensors;
  manifest["params_fnv1a"] = fnv1a(bin.data(), bin.size());
  manifest["metadata"] = metadata;

  fs::path tmp = dir;
  tmp += ".partial";
  fs::remove_all(tmp);
  fs::create_directories(tmp);
  write_file_atomic(tmp / "params.bin", bin);
  write_file_atomic(tmp / "manifest.json", manifest.dump(2) + "\n");
  fs::remove_all(dir);
  if (dir.has_parent_path()) fs::create_directories(dir.parent_path());
  fs::rename(tmp, dir);
}

nlohmann::json read_checkpoint_manifest(const fs::path& dir) {
  try {
    return nlohmann::json::parse(read_file(dir / "manifest.json"));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed checkpoint manifest: ") + e.what());
  }
}

PromptModel load_checkpoint(const fs::path& dir) {
  const auto manifest = read_checkpoint_manifest(dir);
  try {
    if (manifest.at("format").get<std::string>() != kCheckpointFormat)
      throw DataError("unsupported checkpoint format '" + manifest.at("format").get<std::string>() + "'");
    const std::string bin = read_file(dir / "params.bin");
    if (bin.size() < sizeof kMagic || std::memcmp(bin.data(), kMagic, sizeof kMagic) != 0)
      throw DataError("params.bin has a bad magic number");
    if (fnv1a(bin.data(), bin.size()) != manifest.at("params_fnv1a").get<std::uint64_t>())
      throw DataError("params.bin checksum mismatch");

    EncoderSpec spec = encoder_spec_from_json(manifest.at("encoder"));
    spec.vocab = Vocabulary(manifest.at("vocab").get<std::vector<std::string>>());
    if (spec.vocab.tokens() != manifest.at("vocab").get<std::vector<std::string>>())
      throw DataError("checkpoint vocabulary does not start with the reserved specials");

    ParameterSet params;
    PrototypeSpace protos;
    protos.seed = manifest.at("prototype_seed").get<std::uint64_t>();
    for (const auto& t : manifest.at("tensors")) {
      const auto name = t.at("name").get<std::string>();
      Matrix m = read_tensor(bin, t.at("offset").get<std::size_t>(), t.at("rows").get<Eigen::Index>(),
                             t.at("cols").get<Eigen::Index>());
      if (name == "prototypes")
        protos.vectors = std::move(m);
      else
        params.add(name, std::move(m));
    }
    if (spec.kind != EncoderKind::kToy) throw DataError("only toy-backend checkpoints can be restored");
    auto encoder = std::make_unique<ToyEncoder>(std::move(spec), std::move(params));
    return PromptModel(std::move(encoder), std::move(protos), prompt_config_from_json(manifest.at("prompt")),
                       LabelSpace(manifest.at("labels").get<std::vector<std::string>>()),
                       model_options_from_json(manifest.at("options")));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed checkpoint manifest: ") + e.what());
  }
}

}  // namespace fsed
