#pragma once

#include <array>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

namespace devae::testing {

struct SvgEllipse {
    int label = 0;
    int k = 0;
    double cx = 0, cy = 0, rx = 0, ry = 0;
    double rotation_deg = 0;
};

struct SvgSummary {
    std::array<double, 4> view_box{};
    std::vector<std::array<double, 2>> circles;
    std::vector<SvgEllipse> ellipses;
};

namespace detail {

namespace pt = boost::property_tree;

inline void walk(const pt::ptree& node, SvgSummary& out) {
    for (const auto& [name, child] : node) {
        if (name == "<xmlattr>") continue;
        if (name == "circle") {
            out.circles.push_back(
                {child.get<double>("<xmlattr>.cx"), child.get<double>("<xmlattr>.cy")});
        } else if (name == "ellipse") {
            SvgEllipse e;
            e.label = child.get<int>("<xmlattr>.data-label");
            e.k = child.get<int>("<xmlattr>.data-k");
            e.cx = child.get<double>("<xmlattr>.cx");
            e.cy = child.get<double>("<xmlattr>.cy");
            e.rx = child.get<double>("<xmlattr>.rx");
            e.ry = child.get<double>("<xmlattr>.ry");
            std::string tr = child.get<std::string>("<xmlattr>.transform");
            // rotate(deg cx cy)
            std::istringstream is(tr.substr(tr.find('(') + 1));
            is >> e.rotation_deg;
            out.ellipses.push_back(e);
        }
        walk(child, out);
    }
}

}  // namespace detail

// Parses the SVG as XML (throws on malformed input) and collects geometry.
inline SvgSummary parse_svg(const std::string& text) {
    namespace pt = boost::property_tree;
    std::istringstream in(text);
    pt::ptree tree;
    pt::read_xml(in, tree);
    SvgSummary out;
    const auto& svg = tree.get_child("svg");
    std::istringstream vb(svg.get<std::string>("<xmlattr>.viewBox"));
    vb >> out.view_box[0] >> out.view_box[1] >> out.view_box[2] >> out.view_box[3];
    detail::walk(svg, out);
    return out;
}

}  // namespace devae::testing
