#ifndef NANOVLA_IO_H_
#define NANOVLA_IO_H_

#include <cstdint>
#include <string>
#include <string_view>

#include "nanovla/config.h"
#include "nanovla/parameter_store.h"
#include "nanovla/training.h"

namespace nanovla {

inline constexpr std::uint8_t kCheckpointVersion = 1;

// Byte layout: "NVLA", version byte, u32 manifest length + key=value text,
// u32 tensor count, then per tensor u16 name length, name, u8 rank, u32 dims
// and row-major f64 data. All integers and floats are little-endian.
struct Checkpoint {
  KeyValueConfig manifest;
  ParameterStore tensors;
};

std::string serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint parse_checkpoint(std::string_view bytes, std::string_view source = "<bytes>");
void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view bytes);

// Datasets reuse the checkpoint container (tensors named ex.<n>.<field>) and
// add a CSV index with columns example,task_id,demo_step.
void save_dataset(const std::string& binary_path, const std::string& index_path,
                  const Dataset& ds);
Dataset load_dataset(const std::string& binary_path, const std::string& index_path);

}  // namespace nanovla

#endif  // NANOVLA_IO_H_
