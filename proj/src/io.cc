#include "nanovla/io.h"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include "nanovla/csv.h"
#include "nanovla/errors.h"

namespace nanovla {
namespace {

constexpr char kMagic[4] = {'N', 'V', 'L', 'A'};

void put_le(std::string& out, std::uint64_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

class Reader {
 public:
  Reader(std::string_view bytes, std::string_view source) : bytes_(bytes), source_(source) {}

  std::uint64_t uint(int width, const char* what) {
    need(static_cast<std::size_t>(width), what);
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += static_cast<std::size_t>(width);
    return v;
  }

  std::string_view take(std::size_t n, const char* what) {
    need(n, what);
    std::string_view s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  bool at_end() const { return pos_ == bytes_.size(); }
  std::size_t remaining() const { return bytes_.size() - pos_; }

  [[noreturn]] void fail(const std::string& msg) const {
    throw FormatError(std::string(source_) + ": " + msg + " at byte " + std::to_string(pos_));
  }

 private:
  void need(std::size_t n, const char* what) const {
    if (bytes_.size() - pos_ < n) fail(std::string("truncated ") + what);
  }

  std::string_view bytes_;
  std::string_view source_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  std::string out(kMagic, 4);
  out.push_back(static_cast<char>(kCheckpointVersion));
  const std::string manifest = ckpt.manifest.serialize();
  if (manifest.size() > std::numeric_limits<std::uint32_t>::max()) {
    throw FormatError("checkpoint: manifest too large");
  }
  put_le(out, manifest.size(), 4);
  out += manifest;
  put_le(out, ckpt.tensors.size(), 4);
  for (const auto& [name, t] : ckpt.tensors) {
    if (name.size() > std::numeric_limits<std::uint16_t>::max() || t.rank() > 255) {
      throw FormatError("checkpoint: tensor '" + name + "' name or rank too large");
    }
    put_le(out, name.size(), 2);
    out += name;
    put_le(out, t.rank(), 1);
    for (std::size_t d : t.shape()) put_le(out, d, 4);
    for (double v : t.data()) put_le(out, std::bit_cast<std::uint64_t>(v), 8);
  }
  return out;
}

Checkpoint parse_checkpoint(std::string_view bytes, std::string_view source) {
  Reader r(bytes, source);
  if (r.take(4, "magic") != std::string_view(kMagic, 4)) r.fail("bad magic");
  const auto version = r.uint(1, "version");
  if (version != kCheckpointVersion) {
    throw FormatError(std::string(source) + ": unsupported checkpoint version " +
                      std::to_string(version) + " (expected " +
                      std::to_string(kCheckpointVersion) + ")");
  }
  Checkpoint ckpt;
  const auto manifest_len = r.uint(4, "manifest length");
  ckpt.manifest = KeyValueConfig::parse(r.take(manifest_len, "manifest"), source);
  const auto count = r.uint(4, "tensor count");
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::string name(r.take(r.uint(2, "name length"), "tensor name"));
    if (ckpt.tensors.contains(name)) r.fail("duplicate tensor '" + name + "'");
    const auto rank = r.uint(1, "rank");
    Shape shape;
    std::uint64_t elements = 1;
    for (std::uint64_t k = 0; k < rank; ++k) {
      shape.push_back(r.uint(4, "dimension"));
      elements *= shape.back();
    }
    if (elements * 8 > r.remaining()) r.fail("payload shorter than declared shape");
    std::vector<double> data(elements);
    for (double& v : data) v = std::bit_cast<double>(r.uint(8, "tensor data"));
    ckpt.tensors.set(name, Tensor(std::move(shape), std::move(data)));
  }
  if (!r.at_end()) r.fail("trailing bytes");
  return ckpt;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("write failed for " + path);
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  write_file(path, serialize_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::string& path) {
  return parse_checkpoint(read_file(path), path);
}

namespace {

std::string example_key(std::size_t i, const char* field) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "ex.%08zu.%s", i, field);
  return buf;
}

Tensor as_tensor(const std::vector<double>& v) { return Tensor({v.size()}, v); }

std::vector<double> as_vector(const Tensor& t) {
  return std::vector<double>(t.data().begin(), t.data().end());
}

}  // namespace

void save_dataset(const std::string& binary_path, const std::string& index_path,
                  const Dataset& ds) {
  if (ds.index.size() != ds.examples.size()) {
    throw DataError("save_dataset: index and examples differ in length");
  }
  Checkpoint c;
  c.manifest.set("kind", std::string("dataset"));
  c.manifest.set("format_version", static_cast<std::int64_t>(kCheckpointVersion));
  c.manifest.set("horizon", static_cast<std::int64_t>(ds.horizon));
  c.manifest.set("examples", static_cast<std::int64_t>(ds.examples.size()));
  for (std::size_t i = 0; i < ds.examples.size(); ++i) {
    const TrainingExample& ex = ds.examples[i];
    c.tensors.set(example_key(i, "state"), as_tensor(ex.inputs.state));
    c.tensors.set(example_key(i, "env"), as_tensor(ex.inputs.env));
    c.tensors.set(example_key(i, "lang"), as_tensor(ex.inputs.instruction_embedding));
    c.tensors.set(example_key(i, "image"), ex.inputs.image_features);
    c.tensors.set(example_key(i, "latent"), as_tensor(ex.inputs.latent));
    c.tensors.set(example_key(i, "actions"), ex.target.actions);
  }
  save_checkpoint(binary_path, c);
  std::ofstream out(index_path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + index_path);
  CsvWriter w(out, {"example", "task_id", "demo_step"});
  for (const DatasetIndexRow& row : ds.index) {
    w.row({std::to_string(row.example), row.task_id, std::to_string(row.demo_step)});
  }
}

Dataset load_dataset(const std::string& binary_path, const std::string& index_path) {
  const Checkpoint c = load_checkpoint(binary_path);
  if (c.manifest.get_string("kind", "") != "dataset") {
    throw FormatError(binary_path + ": not a dataset file");
  }
  Dataset ds;
  ds.horizon = c.manifest.get_size("horizon", 0);
  const std::size_t n = c.manifest.get_size("examples", 0);
  for (std::size_t i = 0; i < n; ++i) {
    TrainingExample ex;
    ex.inputs.state = as_vector(c.tensors.get(example_key(i, "state")));
    ex.inputs.env = as_vector(c.tensors.get(example_key(i, "env")));
    ex.inputs.instruction_embedding = as_vector(c.tensors.get(example_key(i, "lang")));
    ex.inputs.image_features = c.tensors.get(example_key(i, "image"));
    ex.inputs.latent = as_vector(c.tensors.get(example_key(i, "latent")));
    ex.target.actions = c.tensors.get(example_key(i, "actions"));
    ds.examples.push_back(std::move(ex));
  }
  const CsvTable idx = read_csv(index_path);
  const std::size_t ex_col = idx.column("example"), task_col = idx.column("task_id"),
                    step_col = idx.column("demo_step");
  for (std::size_t r = 0; r < idx.rows.size(); ++r) {
    const auto& row = idx.rows[r];
    DatasetIndexRow ir;
    ir.example = static_cast<std::size_t>(parse_int(row[ex_col], "example"));
    ir.task_id = row[task_col];
    ir.demo_step = static_cast<std::size_t>(parse_int(row[step_col], "demo_step"));
    if (ir.example >= n) {
      throw DataError(index_path + ":" + std::to_string(idx.line_numbers[r]) +
                      ": example index out of range");
    }
    ds.index.push_back(std::move(ir));
  }
  if (ds.index.size() != n) throw DataError(index_path + ": index length mismatch");
  return ds;
}

}  // namespace nanovla
