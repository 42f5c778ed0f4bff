#pragma once

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <variant>
#include <vector>

#include "tma/error.hpp"
#include "tma/volume.hpp"

namespace tma {

static_assert(std::endian::native == std::endian::little,
              "volume I/O assumes a little-endian host");

namespace nifti {

// NIfTI-1 header, 348 bytes. Fields this library does not use are kept zero.
struct Header {
  std::int32_t sizeof_hdr;
  char data_type[10];
  char db_name[18];
  std::int32_t extents;
  std::int16_t session_error;
  char regular;
  char dim_info;
  std::int16_t dim[8];
  float intent_p1, intent_p2, intent_p3;
  std::int16_t intent_code;
  std::int16_t datatype;
  std::int16_t bitpix;
  std::int16_t slice_start;
  float pixdim[8];
  float vox_offset;
  float scl_slope;
  float scl_inter;
  std::int16_t slice_end;
  char slice_code;
  char xyzt_units;
  float cal_max, cal_min;
  float slice_duration;
  float toffset;
  std::int32_t glmax, glmin;
  char descrip[80];
  char aux_file[24];
  std::int16_t qform_code;
  std::int16_t sform_code;
  float quatern_b, quatern_c, quatern_d;
  float qoffset_x, qoffset_y, qoffset_z;
  float srow_x[4];
  float srow_y[4];
  float srow_z[4];
  char intent_name[16];
  char magic[4];
};
static_assert(sizeof(Header) == 348, "NIfTI-1 header must be 348 bytes");

constexpr std::int16_t kFloat32 = 16;  // NIFTI_TYPE_FLOAT32
constexpr char kUnitsMm = 2;           // NIFTI_UNITS_MM
constexpr std::int64_t kMaxVoxels = std::int64_t(1) << 31;

inline Header make_header(const GridGeometry& g, int components) {
  Header h;
  std::memset(&h, 0, sizeof(h));
  h.sizeof_hdr = 348;
  h.regular = 'r';
  h.dim[0] = components == 1 ? 3 : 4;
  h.dim[1] = std::int16_t(g.dims[0]);
  h.dim[2] = std::int16_t(g.dims[1]);
  h.dim[3] = std::int16_t(g.dims[2]);
  h.dim[4] = components == 1 ? 1 : std::int16_t(components);
  for (int i = 5; i < 8; ++i) h.dim[i] = 1;
  h.datatype = kFloat32;
  h.bitpix = 32;
  h.pixdim[0] = 1.0f;
  h.pixdim[1] = float(g.spacing[0]);
  h.pixdim[2] = float(g.spacing[1]);
  h.pixdim[3] = float(g.spacing[2]);
  h.pixdim[4] = 1.0f;
  h.vox_offset = 352.0f;
  h.scl_slope = 1.0f;
  h.xyzt_units = kUnitsMm;
  h.sform_code = 1;
  h.srow_x[0] = float(g.spacing[0]);
  h.srow_x[3] = float(g.origin[0]);
  h.srow_y[1] = float(g.spacing[1]);
  h.srow_y[3] = float(g.origin[1]);
  h.srow_z[2] = float(g.spacing[2]);
  h.srow_z[3] = float(g.origin[2]);
  std::memcpy(h.magic, "n+1", 4);
  return h;
}

inline void write_payload(const std::filesystem::path& path, const Header& h,
                          const std::vector<float>& data) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw format_error("cannot open for writing: " + path.string());
  f.write(reinterpret_cast<const char*>(&h), sizeof(h));
  const char ext[4] = {0, 0, 0, 0};  // no header extensions
  f.write(ext, 4);
  f.write(reinterpret_cast<const char*>(data.data()),
          std::streamsize(data.size() * sizeof(float)));
  if (!f) throw format_error("short write: " + path.string());
}

inline Header read_header(std::ifstream& f, const std::filesystem::path& path) {
  Header h;
  f.read(reinterpret_cast<char*>(&h), sizeof(h));
  if (!f) throw format_error(path.string() + ": truncated header");
  if (h.sizeof_hdr != 348)
    throw format_error(path.string() + ": bad sizeof_hdr (expect 348, little-endian)");
  if (std::strncmp(h.magic, "n+1", 3) != 0 && std::strncmp(h.magic, "ni1", 3) != 0)
    throw format_error(path.string() + ": bad magic");
  if (h.datatype != kFloat32)
    throw format_error(path.string() + ": unsupported datatype (expect float32)");
  if (h.bitpix != 32) throw format_error(path.string() + ": bad bitpix");
  if (h.dim[0] != 3 && h.dim[0] != 4)
    throw format_error(path.string() + ": unsupported dim[0]");
  for (int i = 1; i <= 3; ++i)
    if (h.dim[i] < 2) throw format_error(path.string() + ": dim[" + std::to_string(i) + "] < 2");
  if (h.dim[0] == 4 && h.dim[4] != 3)
    throw format_error(path.string() + ": dim[4] must be 3 for vector volumes");
  for (int i = 1; i <= 3; ++i)
    if (!(h.pixdim[i] > 0.0f))
      throw format_error(path.string() + ": pixdim[" + std::to_string(i) + "] must be > 0");
  if (h.vox_offset < 348.0f) throw format_error(path.string() + ": bad vox_offset");
  return h;
}

inline GridGeometry geometry_from(const Header& h) {
  GridGeometry g;
  g.dims = Vector3i(h.dim[1], h.dim[2], h.dim[3]);
  g.spacing = Vector3d(h.pixdim[1], h.pixdim[2], h.pixdim[3]);
  if (h.sform_code > 0)
    g.origin = Vector3d(h.srow_x[3], h.srow_y[3], h.srow_z[3]);
  else
    g.origin = Vector3d(h.qoffset_x, h.qoffset_y, h.qoffset_z);
  return g;
}

}  // namespace nifti

template <class T>
void write_volume(const Volume<T>& vol, const std::filesystem::path& path) {
  vol.geom.require_valid();
  const auto h = nifti::make_header(vol.geom, 1);
  std::vector<float> data(size_t(vol.geom.voxel_count()));
  for (std::int64_t i = 0; i < vol.values.size(); ++i) data[size_t(i)] = float(vol.values[i]);
  nifti::write_payload(path, h, data);
}

/// Vector volumes go out as 4D files, dim[0]=4 and dim[4]=3, the three
/// components concatenated along the 4th dimension.
template <class T>
void write_volume(const VectorVolume<T>& vol, const std::filesystem::path& path) {
  vol.geom.require_valid();
  const auto h = nifti::make_header(vol.geom, 3);
  const std::int64_t n = vol.geom.voxel_count();
  std::vector<float> data(size_t(3 * n));
  for (int c = 0; c < 3; ++c)
    for (std::int64_t i = 0; i < n; ++i) data[size_t(c * n + i)] = float(vol.vectors(i, c));
  nifti::write_payload(path, h, data);
}

using AnyVolume = std::variant<Volume<float>, VectorVolume<float>>;

inline AnyVolume read_volume(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw format_error("cannot open: " + path.string());
  const auto h = nifti::read_header(f, path);
  const GridGeometry g = nifti::geometry_from(h);
  const int components = (h.dim[0] == 4) ? 3 : 1;
  const std::int64_t n = g.voxel_count();
  if (n <= 0 || n > nifti::kMaxVoxels)
    throw capacity_error(path.string() + ": dim overflow (" + std::to_string(n) + " voxels)");

  f.seekg(std::streamoff(h.vox_offset));
  std::vector<float> data(size_t(n) * components);
  f.read(reinterpret_cast<char*>(data.data()), std::streamsize(data.size() * sizeof(float)));
  if (!f) throw format_error(path.string() + ": truncated data section");

  if (components == 1) {
    Volume<float> v(g);
    for (std::int64_t i = 0; i < n; ++i) v.values[i] = data[size_t(i)];
    return v;
  }
  VectorVolume<float> v(g);
  for (int c = 0; c < 3; ++c)
    for (std::int64_t i = 0; i < n; ++i) v.vectors(i, c) = data[size_t(c * n + i)];
  return v;
}

template <class T = double>
Volume<T> read_scalar_volume(const std::filesystem::path& path) {
  auto any = read_volume(path);
  if (!std::holds_alternative<Volume<float>>(any))
    throw format_error(path.string() + ": expected a scalar volume");
  return std::get<Volume<float>>(any).template cast<T>();
}

template <class T = double>
VectorVolume<T> read_vector_volume(const std::filesystem::path& path) {
  auto any = read_volume(path);
  if (!std::holds_alternative<VectorVolume<float>>(any))
    throw format_error(path.string() + ": expected a vector volume");
  return std::get<VectorVolume<float>>(any).template cast<T>();
}

}  // namespace tma
