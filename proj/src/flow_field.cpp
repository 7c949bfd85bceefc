#include "tde3/flow_field.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "tde3/events.hpp"

namespace tde3 {

FlowField::FlowField(std::size_t bins, int height, int width, double dt)
    : bins_(bins), height_(height), width_(width), dt_(dt) {
  if (height < 0 || width < 0) throw std::invalid_argument("negative flow size");
  const std::size_t n = bins * static_cast<std::size_t>(height) * width;
  vx_.assign(n, 0.0);
  vy_.assign(n, 0.0);
  valid_.assign(n, 0);
}

void write_flow_csv(const FlowField& flow, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "bin,x,y,vx,vy\n";
  char buf[128];
  for (std::size_t b = 0; b < flow.bins(); ++b)
    for (int y = 0; y < flow.height(); ++y)
      for (int x = 0; x < flow.width(); ++x) {
        const std::size_t i = flow.index(b, y, x);
        if (!flow.valid(i)) continue;
        std::snprintf(buf, sizeof buf, "%zu,%d,%d,%.9g,%.9g\n", b, x, y, flow.vx(i),
                      flow.vy(i));
        out << buf;
      }
}

void write_flow_binary(const FlowField& flow, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  char header[128];
  std::snprintf(header, sizeof header, "FLOW %zu %d %d %.17g\n", flow.bins(),
                flow.height(), flow.width(), flow.dt());
  out << header;
  for (std::size_t i = 0; i < flow.cells(); ++i) {
    const float vx = static_cast<float>(flow.vx(i));
    const float vy = static_cast<float>(flow.vy(i));
    const char valid = flow.valid(i) ? 1 : 0;
    out.write(reinterpret_cast<const char*>(&vx), sizeof vx);
    out.write(reinterpret_cast<const char*>(&vy), sizeof vy);
    out.write(&valid, 1);
  }
}

FlowField read_flow_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string(), 0);
  std::string line;
  std::getline(in, line);
  std::istringstream hs(line);
  std::string magic;
  std::size_t bins = 0;
  int h = 0, w = 0;
  double dt = 0.0;
  if (!(hs >> magic >> bins >> h >> w >> dt) || magic != "FLOW")
    throw ParseError("not a flow file: " + path.string(), 1);
  FlowField flow(bins, h, w, dt);
  for (std::size_t i = 0; i < flow.cells(); ++i) {
    float vx = 0.f, vy = 0.f;
    char valid = 0;
    in.read(reinterpret_cast<char*>(&vx), sizeof vx);
    in.read(reinterpret_cast<char*>(&vy), sizeof vy);
    in.read(&valid, 1);
    if (!in) throw ParseError("truncated flow payload", 0);
    flow.vx(i) = vx;
    flow.vy(i) = vy;
    flow.set_valid(i, valid != 0);
  }
  return flow;
}

}  // namespace tde3
