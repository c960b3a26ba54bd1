#include "hlasdi/container.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "hlasdi/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "container I/O assumes a little-endian host");

namespace hlasdi {

namespace {
constexpr char kMagic[4] = {'H', 'L', 'S', 'D'};
constexpr uint32_t kVersion = 1;
}  // namespace

void Container::add(const std::string& name, const Eigen::MatrixXd& m) {
  arrays.emplace_back(name, m);
}

bool Container::has(const std::string& name) const {
  for (const auto& [n, m] : arrays)
    if (n == name) return true;
  return false;
}

const Eigen::MatrixXd& Container::get(const std::string& name) const {
  for (const auto& [n, m] : arrays)
    if (n == name) return m;
  throw DataError("container array not found: " + name);
}

void Container::save(const std::filesystem::path& path) const {
  nlohmann::json hdr = header;
  nlohmann::json manifest = nlohmann::json::array();
  for (const auto& [name, m] : arrays)
    manifest.push_back({{"name", name}, {"rows", m.rows()}, {"cols", m.cols()}});
  hdr["arrays"] = manifest;
  std::string text = hdr.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open for writing: " + path.string());
  out.write(kMagic, 4);
  uint32_t version = kVersion;
  out.write(reinterpret_cast<const char*>(&version), 4);
  uint64_t len = text.size();
  out.write(reinterpret_cast<const char*>(&len), 8);
  out.write(text.data(), std::streamsize(len));
  for (const auto& [name, m] : arrays)
    out.write(reinterpret_cast<const char*>(m.data()),
              std::streamsize(sizeof(double) * size_t(m.size())));
  if (!out) throw DataError("write failed: " + path.string());
}

Container Container::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open: " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw DataError("not a container file: " + path.string());
  uint32_t version = 0;
  in.read(reinterpret_cast<char*>(&version), 4);
  if (version != kVersion)
    throw DataError("unsupported container version in " + path.string());
  uint64_t len = 0;
  in.read(reinterpret_cast<char*>(&len), 8);
  std::string text(len, '\0');
  in.read(text.data(), std::streamsize(len));
  if (!in) throw DataError("truncated header: " + path.string());

  Container c;
  c.header = nlohmann::json::parse(text, nullptr, false);
  if (c.header.is_discarded())
    throw DataError("malformed container header: " + path.string());
  for (const auto& entry : c.header.at("arrays")) {
    Eigen::MatrixXd m(entry.at("rows").get<Eigen::Index>(),
                      entry.at("cols").get<Eigen::Index>());
    in.read(reinterpret_cast<char*>(m.data()),
            std::streamsize(sizeof(double) * size_t(m.size())));
    if (!in) throw DataError("truncated array data: " + path.string());
    c.arrays.emplace_back(entry.at("name").get<std::string>(), std::move(m));
  }
  c.header.erase("arrays");
  return c;
}

}  // namespace hlasdi
