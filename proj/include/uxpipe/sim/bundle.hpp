#pragma once

// Static browsable copy of a simulated site (one image-mapped page per
// screen), so raters in the arena can click through it.

#include <cstring>
#include <filesystem>
#include <string>

#include "uxpipe/image.hpp"
#include "uxpipe/sim/render.hpp"
#include "uxpipe/sim/site.hpp"

namespace uxpipe::sim {

// Whole page of a node, not just the viewport.
inline Screenshot render_page(const SimSite& site, int node_id) {
  const auto& n = site.node(node_id);
  Screenshot page(kViewportWidth, std::max(n.page_height, kViewportHeight));
  const std::size_t row = static_cast<std::size_t>(kViewportWidth) * 3;
  for (int top = 0; top < page.height; top += kViewportHeight) {
    const int scroll = std::min(top, max_scroll(n));
    const auto view = render(site, node_id, scroll);
    const int rows = std::min(kViewportHeight, page.height - scroll);
    std::memcpy(&page.pixels[static_cast<std::size_t>(scroll) * row], view.pixels.data(), rows * row);
  }
  return page;
}

namespace bundle_detail {

inline std::string html_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

inline std::string page_name(int id) { return "node-" + std::to_string(id) + ".html"; }

}  // namespace bundle_detail

// Writes <dir>/index.html plus one page and image per node. Gated edges and
// typing are not representable in a static bundle; those widgets are inert.
inline void write_bundle(const SimSite& site, const std::filesystem::path& dir) {
  using namespace bundle_detail;
  std::filesystem::create_directories(dir);
  for (const auto& n : site.nodes) {
    const auto img = "node-" + std::to_string(n.id) + ".png";
    write_file_bytes(dir / img, encode_png(render_page(site, n.id)));
    std::string html = "<!doctype html>\n<html><head><meta charset=\"utf-8\"><title>" + html_escape(n.title) +
                       "</title><style>body{margin:0}img{display:block}</style></head><body>\n";
    html += "<img src=\"" + img + "\" width=\"" + std::to_string(kViewportWidth) + "\" usemap=\"#m\" alt=\"" +
            html_escape(n.title) + "\">\n<map name=\"m\">\n";
    for (const auto& w : n.widgets) {
      const auto* e = site.edge(n.id, w.id);
      if (w.inert || !e || e->gate || e->to == n.id) continue;
      const auto& r = w.rect;
      html += "<area shape=\"rect\" coords=\"" + std::to_string(r.x) + "," + std::to_string(r.y) + "," +
              std::to_string(r.x + r.w) + "," + std::to_string(r.y + r.h) + "\" href=\"" + page_name(e->to) +
              "\" alt=\"" + html_escape(w.label) + "\">\n";
    }
    html += "</map>\n</body></html>\n";
    write_file_bytes(dir / page_name(n.id), std::vector<std::uint8_t>(html.begin(), html.end()));
  }
  const std::string index = "<!doctype html>\n<html><head><meta http-equiv=\"refresh\" content=\"0; url=" +
                            page_name(site.entry) + "\"></head><body></body></html>\n";
  write_file_bytes(dir / "index.html", std::vector<std::uint8_t>(index.begin(), index.end()));
}

}  // namespace uxpipe::sim
