#pragma once

#include <string>
#include <vector>

#include "myomap/cohort.hpp"

namespace testutil {

inline myomap::MapEntry make_entry(const std::string& map_id, const std::string& subject_id, myomap::Modality modality,
                                   std::size_t rows = 4, std::size_t cols = 4, double fill = 1000.0) {
    myomap::MapEntry e;
    e.map.map_id = map_id;
    e.map.subject_id = subject_id;
    e.map.modality = modality;
    e.map.slice_location = myomap::SliceLocation::Mid;
    e.map.grid = myomap::PixelGrid(rows, cols, {1.5, 1.5}, fill);
    myomap::LabelMask m("gt", rows, cols, {1.5, 1.5});
    m.at(0, 0) = myomap::label::kBloodPool;
    m.at(rows - 1, cols - 1) = myomap::label::kMyocardium;
    e.masks.push_back(m);
    return e;
}

inline myomap::Subject make_subject(const std::string& id, myomap::Diagnosis dx,
                                    const std::vector<myomap::Modality>& modalities) {
    myomap::Subject s;
    s.subject_id = id;
    s.diagnosis = dx;
    for (std::size_t i = 0; i < modalities.size(); ++i) {
        s.maps.push_back(make_entry(id + "_m" + std::to_string(i), id, modalities[i]));
    }
    return s;
}

/// Subjects with the given diagnoses, ids S000, S001, ...; each has one T1 native and one T2 map.
inline myomap::Cohort make_cohort(const std::vector<myomap::Diagnosis>& diagnoses) {
    myomap::Cohort c;
    for (std::size_t i = 0; i < diagnoses.size(); ++i) {
        std::string id = std::to_string(i);
        id = "S" + std::string(3 - std::min<std::size_t>(3, id.size()), '0') + id;
        c.subjects.push_back(make_subject(id, diagnoses[i], {myomap::Modality::T1Native, myomap::Modality::T2}));
    }
    return c;
}

}  // namespace testutil
