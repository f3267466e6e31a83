#include "cardiocep/clinical.hpp"

namespace cardiocep {

namespace {

using std::nullopt;

ClinicalBandTable make_table()
{
    ClinicalBandTable table;
    table.push_back({"age", Unit::Years,
                     {
                         {"Young", "45", nullopt, 45.0},
                         {"Medium", "40-65", 40.0, 65.0},
                         {"Old", "60-75", 60.0, 75.0},
                         {"Very Old", ">=70", 70.0, nullopt},
                     },
                     {}});
    table.push_back({"sbp", Unit::MmHg,
                     {
                         {"Optimal", "<120", nullopt, 120.0},
                         {"Normal", "120-129", 120.0, 129.0},
                         {"Normally High", "130-139", 130.0, 139.0},
                         {"Grade 1 (Light)", "140-159", 140.0, 159.0},
                         {"Grade 2 (Moderate)", "160-179", 160.0, 179.0},
                     },
                     {
                         {"Systolic Hypertension (Isolated)", ">=140", 140.0, nullopt},
                     }});
    table.push_back({"dbp", Unit::MmHg,
                     {
                         {"Optimal", "<80", nullopt, 80.0},
                         {"Normal", "80-84", 80.0, 84.0},
                         {"Normally High", "85-89", 85.0, 89.0},
                         {"Grade 1 (Light)", "90-99", 90.0, 99.0},
                         {"Grade 2 (Moderate)", "100-109", 100.0, 109.0},
                         {"Grade 3 (Severe)", ">=110", 110.0, nullopt},
                     },
                     {
                         {"Diastolic Hypertension (Isolated)", "<90", nullopt, 90.0},
                     }});
    table.push_back({"gender", Unit::Code,
                     {
                         {"Female", "1", 1.0, 1.0},
                         {"Male", "2", 2.0, 2.0},
                     },
                     {}});
    table.push_back({"smoking", Unit::Code,
                     {
                         {"Non-Smoker", "0", 0.0, 0.0},
                         {"Smoker", "1", 1.0, 1.0},
                     },
                     {}});
    table.push_back({"glucose", Unit::GramsPerLitre,
                     {
                         {"Non-diabetic", "0.8-1.0", 0.8, 1.0},
                         {"Prediabetic", "1.01-1.24", 1.01, 1.24},
                         {"Diabetic", ">=1.26", 1.26, nullopt},
                     },
                     {}});
    table.push_back({"cholesterol", Unit::MmolPerLitre,
                     {
                         {"Normal", "<5.2", nullopt, 5.2},
                         {"Medium", "5.2-6.1", 5.2, 6.1},
                         {"High", "≥ 6.2", 6.2, nullopt},
                     },
                     {}});
    return table;
}

} // namespace

const Band* VariableBands::find(std::string_view label) const noexcept
{
    for (const auto* list : {&bands, &annotations}) {
        for (const auto& band : *list) {
            if (band.label == label) {
                return &band;
            }
        }
    }
    return nullptr;
}

const ClinicalBandTable& band_table()
{
    static const ClinicalBandTable table = make_table();
    return table;
}

const VariableBands* find_bands(const ClinicalBandTable& table, std::string_view variable) noexcept
{
    for (const auto& entry : table) {
        if (entry.variable == variable) {
            return &entry;
        }
    }
    return nullptr;
}

HypertensionFlags isolated_hypertension(double sbp, double dbp) noexcept
{
    return {sbp >= 140.0 && dbp < 90.0, sbp < 140.0 && dbp >= 90.0};
}

} // namespace cardiocep
